//! Parameter matrices and the scoring, loss and gradient mathematics of
//! the semantic (skip-gram) and spell-correction objectives.
//!
//! Both objectives share one input matrix holding word rows and hashed
//! n-gram rows. The semantic objective scores a composed input against an
//! output-matrix row; the spell-correction objective scores the composed
//! n-grams of a misspelling against the *input* word row of the expected
//! word.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::ConfigError;
use crate::real::Real;
use crate::subword::{self, InputIds, NgramConfig};
use crate::vocab::Vocabulary;

/// Which parameter matrix a row lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Input,
    Output,
}

/// Row-level access to the two parameter matrices.
///
/// Implemented by [`EmbeddingModel`] for exclusive single-worker training
/// and by shared stores for multi-worker training, where concurrent
/// read-modify-write races are tolerated.
pub trait Parameters<F: Real> {
    fn dim(&self) -> usize;
    fn read_row(&self, side: Side, row: u32, out: &mut [F]);
    fn dot_row(&self, side: Side, row: u32, x: &[F]) -> F;
    /// `out += scale * row`
    fn accumulate_row(&self, side: Side, row: u32, scale: F, out: &mut [F]);
    /// `row += scale * x`
    fn add_to_row(&mut self, side: Side, row: u32, scale: F, x: &[F]);
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Real> Matrix<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<F>) -> Result<Self, ConfigError> {
        if data.len() != rows * cols {
            return Err(ConfigError::Invalid(alloc::format!(
                "matrix data has {} entries, expected {rows} x {cols}",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [F] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[F] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [F] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<F> {
        self.data
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

#[inline]
pub fn dot<F: Real>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).fold(F::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
fn axpy<F: Real>(y: &mut [F], scale: F, x: &[F]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + scale * xi;
    }
}

/// Input matrix over words and n-gram buckets, output matrix over words.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel<F> {
    vocab: Vocabulary,
    ngram: NgramConfig,
    normalize: bool,
    input: Matrix<F>,
    output: Matrix<F>,
}

impl<F: Real> EmbeddingModel<F> {
    /// All-zero model.
    pub fn zeros(vocab: Vocabulary, ngram: NgramConfig, dim: usize, normalize: bool) -> Self {
        let rows = vocab.len() + ngram.bucket_count as usize;
        let words = vocab.len();
        EmbeddingModel {
            vocab,
            ngram,
            normalize,
            input: Matrix::zeros(rows, dim),
            output: Matrix::zeros(words, dim),
        }
    }

    /// Input entries uniform in `[-1/dim, 1/dim]`, output entries zero.
    pub fn initialized<R: Rng + ?Sized>(
        vocab: Vocabulary,
        ngram: NgramConfig,
        dim: usize,
        normalize: bool,
        rng: &mut R,
    ) -> Self {
        let mut model = Self::zeros(vocab, ngram, dim, normalize);
        let bound = 1.0 / dim as f64;
        for x in model.input.as_mut_slice() {
            *x = F::of_f64(rng.random_range(-bound..=bound));
        }
        model
    }

    pub fn from_parts(
        vocab: Vocabulary,
        ngram: NgramConfig,
        normalize: bool,
        input: Matrix<F>,
        output: Matrix<F>,
    ) -> Result<Self, ConfigError> {
        ngram.validate()?;
        let rows = vocab.len() + ngram.bucket_count as usize;
        if input.rows() != rows || output.rows() != vocab.len() || input.cols() != output.cols() {
            return Err(ConfigError::Invalid(alloc::format!(
                "matrix shapes {}x{} / {}x{} do not match |V| = {} and {} buckets",
                input.rows(),
                input.cols(),
                output.rows(),
                output.cols(),
                vocab.len(),
                ngram.bucket_count
            )));
        }
        Ok(EmbeddingModel {
            vocab,
            ngram,
            normalize,
            input,
            output,
        })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn ngram(&self) -> &NgramConfig {
        &self.ngram
    }

    /// Whether composed inputs are averaged rather than summed.
    pub fn normalize(&self) -> bool {
        self.normalize
    }

    pub fn dim(&self) -> usize {
        self.input.cols()
    }

    pub fn input(&self) -> &Matrix<F> {
        &self.input
    }

    pub fn output(&self) -> &Matrix<F> {
        &self.output
    }

    pub fn input_mut(&mut self) -> &mut Matrix<F> {
        &mut self.input
    }

    pub fn output_mut(&mut self) -> &mut Matrix<F> {
        &mut self.output
    }

    pub fn into_parts(self) -> (Vocabulary, NgramConfig, bool, Matrix<F>, Matrix<F>) {
        (self.vocab, self.ngram, self.normalize, self.input, self.output)
    }

    pub fn all_finite(&self) -> bool {
        self.input.all_finite() && self.output.all_finite()
    }

    pub fn word_input_ids(&self, token: &str) -> InputIds {
        subword::word_input_ids(token, &self.vocab, &self.ngram)
    }

    pub fn misspelling_input_ids(&self, token: &str) -> InputIds {
        subword::misspelling_input_ids(token, self.vocab.len(), &self.ngram)
    }

    /// Composed input vector of a token: its word row (when in the
    /// vocabulary) and its n-grams. Zero when no rows exist.
    pub fn compose_token(&self, token: &str) -> Vec<F> {
        let mut out = vec![F::zero(); self.dim()];
        compose_input(self, &self.word_input_ids(token).rows(), self.normalize, &mut out);
        out
    }

    /// Spell-correction score of a misspelling against an in-vocabulary word.
    ///
    /// Panics if `expected` is not a vocabulary id.
    pub fn score_sc(&self, misspelling: &InputIds, expected: u32) -> F {
        assert!(
            (expected as usize) < self.vocab.len(),
            "spell-correction target {expected} is not a vocabulary word"
        );
        score_sc(self, &misspelling.rows(), expected, self.normalize)
    }

    pub fn score_ft(&self, word: &InputIds, context: u32) -> F {
        score_ft(self, &word.rows(), context, self.normalize)
    }
}

impl<F: Real> Parameters<F> for EmbeddingModel<F> {
    #[inline]
    fn dim(&self) -> usize {
        self.input.cols()
    }

    #[inline]
    fn read_row(&self, side: Side, row: u32, out: &mut [F]) {
        let src = match side {
            Side::Input => self.input.row(row as usize),
            Side::Output => self.output.row(row as usize),
        };
        out.copy_from_slice(src);
    }

    #[inline]
    fn dot_row(&self, side: Side, row: u32, x: &[F]) -> F {
        match side {
            Side::Input => dot(self.input.row(row as usize), x),
            Side::Output => dot(self.output.row(row as usize), x),
        }
    }

    #[inline]
    fn accumulate_row(&self, side: Side, row: u32, scale: F, out: &mut [F]) {
        let src = match side {
            Side::Input => self.input.row(row as usize),
            Side::Output => self.output.row(row as usize),
        };
        axpy(out, scale, src);
    }

    #[inline]
    fn add_to_row(&mut self, side: Side, row: u32, scale: F, x: &[F]) {
        let dst = match side {
            Side::Input => self.input.row_mut(row as usize),
            Side::Output => self.output.row_mut(row as usize),
        };
        axpy(dst, scale, x);
    }
}

/// `log(1 + e^{-x})`, stable for large `|x|`.
#[inline]
pub fn logistic_loss<F: Real>(x: F) -> F {
    if x > F::zero() {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

/// `1 / (1 + e^{-x})`, stable for large `|x|`.
#[inline]
pub fn sigmoid<F: Real>(x: F) -> F {
    if x >= F::zero() {
        F::one() / (F::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (F::one() + e)
    }
}

/// Sum of the given input rows, divided by their count when `normalize`
/// is set. Returns `false` and leaves `out` zeroed when `rows` is empty.
pub fn compose_input<F: Real, P: Parameters<F> + ?Sized>(
    params: &P,
    rows: &[u32],
    normalize: bool,
    out: &mut [F],
) -> bool {
    out.iter_mut().for_each(|x| *x = F::zero());
    if rows.is_empty() {
        return false;
    }
    for &r in rows {
        params.accumulate_row(Side::Input, r, F::one(), out);
    }
    if normalize {
        let inv = F::one() / F::of_f64(rows.len() as f64);
        out.iter_mut().for_each(|x| *x = *x * inv);
    }
    true
}

/// Which objective a training example belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Skip-gram over the corpus: composed word input against output rows.
    Ft,
    /// Spell correction: composed misspelling n-grams against input word rows.
    Sc,
}

impl Branch {
    #[inline]
    pub fn target_side(self) -> Side {
        match self {
            Branch::Ft => Side::Output,
            Branch::Sc => Side::Input,
        }
    }
}

/// One summand of either loss.
#[derive(Debug, Clone, Copy)]
pub struct TrainingExample<'a> {
    /// Composition rows of the input side.
    pub inputs: &'a [u32],
    pub target: u32,
    pub negatives: &'a [u32],
    pub branch: Branch,
}

pub fn score_ft<F: Real, P: Parameters<F> + ?Sized>(
    params: &P,
    inputs: &[u32],
    context: u32,
    normalize: bool,
) -> F {
    let mut h = vec![F::zero(); params.dim()];
    compose_input(params, inputs, normalize, &mut h);
    params.dot_row(Side::Output, context, &h)
}

pub fn score_sc<F: Real, P: Parameters<F> + ?Sized>(
    params: &P,
    inputs: &[u32],
    expected: u32,
    normalize: bool,
) -> F {
    let mut h = vec![F::zero(); params.dim()];
    compose_input(params, inputs, normalize, &mut h);
    params.dot_row(Side::Input, expected, &h)
}

/// Positive term plus one negative term per sampled word.
pub fn example_loss<F: Real, P: Parameters<F> + ?Sized>(
    params: &P,
    example: &TrainingExample<'_>,
    normalize: bool,
) -> F {
    let side = example.branch.target_side();
    let mut h = vec![F::zero(); params.dim()];
    compose_input(params, example.inputs, normalize, &mut h);
    let mut loss = logistic_loss(params.dot_row(side, example.target, &h));
    for &n in example.negatives {
        loss = loss + logistic_loss(-params.dot_row(side, n, &h));
    }
    loss
}

/// Reusable buffers for [`sgns_update`].
#[derive(Debug, Clone)]
pub struct Scratch<F> {
    hidden: Vec<F>,
    grad: Vec<F>,
    coeffs: Vec<F>,
}

impl<F: Real> Scratch<F> {
    pub fn new(dim: usize) -> Self {
        Scratch {
            hidden: vec![F::zero(); dim],
            grad: vec![F::zero(); dim],
            coeffs: Vec::new(),
        }
    }
}

/// One gradient-descent step on `example_loss`, scaled by `lr * weight`.
///
/// All scores and gradients are evaluated at the pre-update parameters, so
/// the step is an exact gradient step even when a negative repeats.
/// Returns the pre-update loss. A weight of zero leaves the parameters
/// untouched.
///
/// Panics if a non-finite value would be written.
pub fn sgns_update<F: Real, P: Parameters<F> + ?Sized>(
    params: &mut P,
    example: &TrainingExample<'_>,
    normalize: bool,
    lr: F,
    weight: F,
    scratch: &mut Scratch<F>,
) -> F {
    let side = example.branch.target_side();
    let Scratch {
        hidden,
        grad,
        coeffs,
    } = scratch;
    if !compose_input(&*params, example.inputs, normalize, hidden) {
        // no input rows: every score is zero and there is nothing to move
        let n = F::of_f64(1.0 + example.negatives.len() as f64);
        return n * logistic_loss(F::zero());
    }

    grad.iter_mut().for_each(|g| *g = F::zero());
    coeffs.clear();
    let mut loss = F::zero();
    let targets = core::iter::once((example.target, true))
        .chain(example.negatives.iter().map(|&n| (n, false)));
    for (t, positive) in targets {
        let s = params.dot_row(side, t, hidden);
        let g = if positive {
            loss = loss + logistic_loss(s);
            sigmoid(-s)
        } else {
            loss = loss + logistic_loss(-s);
            -sigmoid(s)
        };
        params.accumulate_row(side, t, g, grad);
        coeffs.push(g);
    }

    if weight == F::zero() {
        return loss;
    }
    let step = lr * weight;
    let targets = core::iter::once(example.target).chain(example.negatives.iter().copied());
    for (t, &g) in targets.zip(coeffs.iter()) {
        let scale = step * g;
        assert!(scale.is_finite(), "non-finite update coefficient");
        params.add_to_row(side, t, scale, hidden);
    }

    let mut scale = step;
    if normalize {
        scale = scale / F::of_f64(example.inputs.len() as f64);
    }
    assert!(
        grad.iter().all(|g| g.is_finite()),
        "non-finite gradient for composed inputs"
    );
    for &r in example.inputs {
        params.add_to_row(Side::Input, r, scale, grad);
    }
    loss
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn tiny(dim: usize, buckets: u32) -> EmbeddingModel<f64> {
        let vocab = Vocabulary::from_tokens(["a", "b", "b", "c", "c", "c", "dd"], 1).unwrap();
        let ngram = NgramConfig::new(1, 2, buckets).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut m = EmbeddingModel::initialized(vocab, ngram, dim, true, &mut rng);
        for x in m.output_mut().as_mut_slice() {
            *x = rng.random_range(-0.5..0.5);
        }
        m
    }

    #[test]
    fn logistic_loss_values() {
        assert!((logistic_loss(0.0f64) - core::f64::consts::LN_2).abs() < 1e-15);
        let x = 3.7f64;
        assert!((logistic_loss(x) - logistic_loss(-x) + x).abs() < 1e-12);
        let big = logistic_loss(100.0f64);
        assert!(big > 0.0 && (big - 3.720075976020836e-44).abs() < 1e-56);
        assert!((logistic_loss(-100.0f64) - 100.0).abs() < 1e-12);
        assert!(logistic_loss(-1000.0f32).is_finite());
    }

    #[test]
    fn compose_single_and_opposite_rows() {
        let mut m = tiny(3, 4);
        m.input_mut().row_mut(0).copy_from_slice(&[0.5, -1.0, 2.0]);
        m.input_mut().row_mut(1).copy_from_slice(&[-0.5, 1.0, -2.0]);
        let mut out = [0.0; 3];
        for normalize in [true, false] {
            assert!(compose_input(&m, &[0], normalize, &mut out));
            assert_eq!(out, [0.5, -1.0, 2.0]);
        }
        compose_input(&m, &[0, 1], true, &mut out);
        assert_eq!(out, [0.0; 3]);
        assert!(!compose_input(&m, &[], true, &mut out));
        assert_eq!(out, [0.0; 3]);
    }

    #[test]
    fn score_sc_with_empty_ngrams_is_zero() {
        let m = tiny(3, 4);
        assert_eq!(m.score_sc(&InputIds::default(), 1), 0.0);
    }

    #[test]
    fn score_sc_uses_input_word_row() {
        let mut m = tiny(3, 4);
        let target = m.vocab().id("c").unwrap();
        let bucket = m.vocab().len() as u32;
        m.input_mut().row_mut(target as usize).copy_from_slice(&[0.0, 1.0, 0.0]);
        m.input_mut().row_mut(bucket as usize).copy_from_slice(&[0.0, 1.0, 0.0]);
        let ids = InputIds {
            word: None,
            buckets: vec![bucket],
        };
        assert_eq!(m.score_sc(&ids, target), 1.0);
    }

    #[test]
    #[should_panic]
    fn score_sc_rejects_non_vocabulary_target() {
        let m = tiny(3, 4);
        m.score_sc(&InputIds::default(), 99);
    }

    #[test]
    fn zero_weight_is_a_no_op() {
        let mut m = tiny(4, 8);
        let before = m.clone();
        let mut scratch = Scratch::new(4);
        for branch in [Branch::Ft, Branch::Sc] {
            let ex = TrainingExample {
                inputs: &[0, 4, 5],
                target: 1,
                negatives: &[2, 3, 2],
                branch,
            };
            sgns_update(&mut m, &ex, true, 0.5, 0.0, &mut scratch);
        }
        assert_eq!(m, before);
    }

    #[test]
    fn update_lowers_loss_for_small_lr() {
        let mut m = tiny(4, 8);
        let mut scratch = Scratch::new(4);
        for branch in [Branch::Ft, Branch::Sc] {
            let ex = TrainingExample {
                inputs: &[0, 5],
                target: 2,
                negatives: &[],
                branch,
            };
            let before = example_loss(&m, &ex, true);
            let reported = sgns_update(&mut m, &ex, true, 1e-3, 1.0, &mut scratch);
            let after = example_loss(&m, &ex, true);
            assert_eq!(before, reported);
            assert!(after < before, "{branch:?}: {after} !< {before}");
        }
    }

    #[test]
    fn zero_parameters_give_ln2_per_term() {
        let vocab = Vocabulary::from_tokens(["a", "b", "c"], 1).unwrap();
        let m: EmbeddingModel<f64> =
            EmbeddingModel::zeros(vocab, NgramConfig::new(1, 1, 3).unwrap(), 2, true);
        let ex = TrainingExample {
            inputs: &[0, 3],
            target: 1,
            negatives: &[2, 2, 0],
            branch: Branch::Ft,
        };
        let loss = example_loss(&m, &ex, true);
        assert!((loss - 4.0 * core::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn ft_update_touches_only_its_rows() {
        let mut m = tiny(3, 8);
        let before = m.clone();
        let mut scratch = Scratch::new(3);
        let ex = TrainingExample {
            inputs: &[1, 6],
            target: 0,
            negatives: &[3],
            branch: Branch::Ft,
        };
        sgns_update(&mut m, &ex, true, 0.1, 1.0, &mut scratch);
        for r in 0..m.input().rows() {
            if r != 1 && r != 6 {
                assert_eq!(m.input().row(r), before.input().row(r), "input row {r}");
            }
        }
        for r in 0..m.output().rows() {
            if r != 0 && r != 3 {
                assert_eq!(m.output().row(r), before.output().row(r));
            }
        }
    }

    #[test]
    fn sc_update_never_touches_output() {
        let mut m = tiny(3, 8);
        let before = m.clone();
        let mut scratch = Scratch::new(3);
        let ex = TrainingExample {
            inputs: &[5, 6, 7],
            target: 0,
            negatives: &[1, 2],
            branch: Branch::Sc,
        };
        sgns_update(&mut m, &ex, true, 0.1, 1.0, &mut scratch);
        assert_eq!(m.output(), before.output());
        assert_ne!(m.input(), before.input());
    }
}
