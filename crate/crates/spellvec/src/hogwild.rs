//! Lock-free shared parameters for multi-worker training.
//!
//! Every entry is an `f32` stored in an `AtomicU32`. Reads and writes are
//! relaxed and a row update is a plain load-add-store per entry, so
//! concurrent updates to the same entry may be lost. That is the usual
//! trade-off of asynchronous SGD on sparse updates; no entry is ever torn.

use std::sync::atomic::{AtomicU32, Ordering};

use spellvec_core::{EmbeddingModel, Matrix, NgramConfig, Parameters, Side, Vocabulary};

struct SharedMatrix {
    data: Vec<AtomicU32>,
    rows: usize,
    cols: usize,
}

impl SharedMatrix {
    fn new(m: Matrix<f32>) -> Self {
        let (rows, cols) = (m.rows(), m.cols());
        let data = m.into_vec().into_iter().map(|x| AtomicU32::new(x.to_bits())).collect();
        SharedMatrix { data, rows, cols }
    }

    #[inline]
    fn row(&self, i: u32) -> &[AtomicU32] {
        let start = i as usize * self.cols;
        &self.data[start..start + self.cols]
    }

    fn snapshot(&self) -> Matrix<f32> {
        let data = self
            .data
            .iter()
            .map(|a| f32::from_bits(a.load(Ordering::Relaxed)))
            .collect();
        Matrix::from_vec(self.rows, self.cols, data).expect("shape is preserved")
    }
}

#[inline]
fn load(a: &AtomicU32) -> f32 {
    f32::from_bits(a.load(Ordering::Relaxed))
}

/// Both parameter matrices, shareable across threads.
pub struct SharedModel {
    vocab: Vocabulary,
    ngram: NgramConfig,
    normalize: bool,
    input: SharedMatrix,
    output: SharedMatrix,
}

impl SharedModel {
    pub fn new(model: EmbeddingModel<f32>) -> Self {
        let (vocab, ngram, normalize, input, output) = model.into_parts();
        SharedModel {
            vocab,
            ngram,
            normalize,
            input: SharedMatrix::new(input),
            output: SharedMatrix::new(output),
        }
    }

    /// A handle for one worker.
    pub fn view(&self) -> SharedView<'_> {
        SharedView { model: self }
    }

    /// Copies the current values into a regular model.
    pub fn snapshot(&self) -> EmbeddingModel<f32> {
        EmbeddingModel::from_parts(
            self.vocab.clone(),
            self.ngram,
            self.normalize,
            self.input.snapshot(),
            self.output.snapshot(),
        )
        .expect("shapes are preserved")
    }

    pub fn into_model(self) -> EmbeddingModel<f32> {
        EmbeddingModel::from_parts(
            self.vocab,
            self.ngram,
            self.normalize,
            self.input.snapshot(),
            self.output.snapshot(),
        )
        .expect("shapes are preserved")
    }

    pub fn all_finite(&self) -> bool {
        let finite = |m: &SharedMatrix| m.data.iter().all(|a| load(a).is_finite());
        finite(&self.input) && finite(&self.output)
    }

    fn matrix(&self, side: Side) -> &SharedMatrix {
        match side {
            Side::Input => &self.input,
            Side::Output => &self.output,
        }
    }
}

#[derive(Clone, Copy)]
pub struct SharedView<'a> {
    model: &'a SharedModel,
}

impl Parameters<f32> for SharedView<'_> {
    fn dim(&self) -> usize {
        self.model.input.cols
    }

    fn read_row(&self, side: Side, row: u32, out: &mut [f32]) {
        for (o, a) in out.iter_mut().zip(self.model.matrix(side).row(row)) {
            *o = load(a);
        }
    }

    fn dot_row(&self, side: Side, row: u32, x: &[f32]) -> f32 {
        self.model
            .matrix(side)
            .row(row)
            .iter()
            .zip(x)
            .map(|(a, &x)| load(a) * x)
            .sum()
    }

    fn accumulate_row(&self, side: Side, row: u32, scale: f32, out: &mut [f32]) {
        for (o, a) in out.iter_mut().zip(self.model.matrix(side).row(row)) {
            *o += scale * load(a);
        }
    }

    fn add_to_row(&mut self, side: Side, row: u32, scale: f32, x: &[f32]) {
        for (a, &x) in self.model.matrix(side).row(row).iter().zip(x) {
            let v = load(a) + scale * x;
            a.store(v.to_bits(), Ordering::Relaxed);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use spellvec_core::model::compose_input;

    #[test]
    fn round_trips_and_matches_plain_model() {
        let vocab = Vocabulary::from_tokens(["ab", "cd", "ab"], 1).unwrap();
        let ngram = NgramConfig::new(1, 1, 5).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let mut plain = EmbeddingModel::<f32>::initialized(vocab, ngram, 3, true, &mut rng);
        let shared = SharedModel::new(plain.clone());
        let mut view = shared.view();
        let x = [0.5, -1.0, 2.0];
        plain.add_to_row(Side::Input, 4, 0.1, &x);
        view.add_to_row(Side::Input, 4, 0.1, &x);
        plain.add_to_row(Side::Output, 1, -0.3, &x);
        view.add_to_row(Side::Output, 1, -0.3, &x);
        let mut a = [0.0; 3];
        let mut b = [0.0; 3];
        compose_input(&plain, &[0, 4, 6], true, &mut a);
        compose_input(&view, &[0, 4, 6], true, &mut b);
        assert_eq!(a, b);
        assert_eq!(shared.into_model(), plain);
    }
}
