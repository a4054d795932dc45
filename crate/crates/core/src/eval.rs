//! Intrinsic evaluation: word similarity, word analogies and the
//! neighborhood validity of misspellings.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_traits::Float;

use crate::misspell::MisspellingPair;
use crate::model::{compose_input, EmbeddingModel};
use crate::real::Real;

/// Which vectors a similarity compares against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Composed input vectors on both sides.
    #[default]
    InIn,
    /// Composed input vector against the output vector of an in-vocabulary
    /// word; out-of-vocabulary targets fall back to their composed input.
    InOut,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityRow {
    pub a: String,
    pub b: String,
    /// Human judgment in `[0, 10]`.
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Section {
    Semantic,
    Syntactic,
}

impl Section {
    /// Standard analogy files prefix syntactic section names with `gram`.
    pub fn from_header(name: &str) -> Self {
        if name.starts_with("gram") {
            Section::Syntactic
        } else {
            Section::Semantic
        }
    }
}

/// "A is to B like C is to D".
#[derive(Debug, Clone, PartialEq)]
pub struct AnalogyRow {
    pub a: String,
    pub b: String,
    pub c: String,
    pub d: String,
    pub section: Section,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub task: String,
    pub metrics: Vec<(String, f64)>,
    pub evaluated: usize,
    pub skipped: usize,
}

impl EvalReport {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|m| m.0 == name).map(|m| m.1)
    }
}

/// Composed input vector of a token: word row plus n-grams when in the
/// vocabulary, n-grams only otherwise, zero when neither exists.
pub fn represent<F: Real>(model: &EmbeddingModel<F>, token: &str) -> Vec<F> {
    model.compose_token(token)
}

/// Cosine similarity; 0 when either vector is zero.
pub fn cosine<F: Real>(x: &[F], y: &[F]) -> f64 {
    let (mut xy, mut xx, mut yy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (a, b) = (a.as_f64(), b.as_f64());
        xy += a * b;
        xx += a * a;
        yy += b * b;
    }
    if xx == 0.0 || yy == 0.0 {
        return 0.0;
    }
    (xy / (Float::sqrt(xx) * Float::sqrt(yy))).clamp(-1.0, 1.0)
}

/// 1-based ranks, tied values sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    (sxy / Float::sqrt(sxx * syy)).clamp(-1.0, 1.0)
}

/// Spearman's rank correlation with average-rank tie handling. Returns 0
/// for fewer than two points or when either list is constant.
pub fn spearman(pred: &[f64], human: &[f64]) -> f64 {
    assert_eq!(pred.len(), human.len(), "spearman inputs differ in length");
    if pred.len() < 2 {
        return 0.0;
    }
    pearson(&average_ranks(pred), &average_ranks(human))
}

/// Unit-normalized candidate vectors for every vocabulary word.
#[derive(Debug, Clone)]
pub struct WordIndex {
    dim: usize,
    mode: Mode,
    rows: Vec<f32>,
}

fn normalized<F: Real>(v: &[F]) -> Vec<f32> {
    let norm = Float::sqrt(v.iter().map(|x| x.as_f64() * x.as_f64()).sum::<f64>());
    if norm == 0.0 {
        return vec![0.0; v.len()];
    }
    v.iter().map(|x| (x.as_f64() / norm) as f32).collect()
}

impl WordIndex {
    pub fn new<F: Real>(model: &EmbeddingModel<F>, mode: Mode) -> Self {
        let dim = model.dim();
        let n = model.vocab().len();
        let mut rows = Vec::with_capacity(n * dim);
        let mut h = vec![F::zero(); dim];
        for id in 0..n as u32 {
            match mode {
                Mode::InIn => {
                    let ids = model.word_input_ids(model.vocab().word(id));
                    compose_input(model, &ids.rows(), model.normalize(), &mut h);
                    rows.extend(normalized(&h));
                }
                Mode::InOut => rows.extend(normalized(model.output().row(id as usize))),
            }
        }
        WordIndex { dim, mode, rows }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.rows.len() / self.dim.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, id: u32) -> &[f32] {
        &self.rows[id as usize * self.dim..(id as usize + 1) * self.dim]
    }

    /// Cosine of `query` against every word, in id order.
    fn scores(&self, query: &[f32]) -> Vec<f64> {
        let q = normalized(query);
        self.rows
            .chunks_exact(self.dim)
            .map(|r| r.iter().zip(&q).map(|(&a, &b)| a as f64 * b as f64).sum())
            .collect()
    }

    /// The `k` nearest words by cosine, best first; ties go to the lower id.
    pub fn nearest<F: Real>(&self, query: &[F], k: usize) -> Vec<(u32, f64)> {
        let q: Vec<f32> = query.iter().map(|x| x.as_f64() as f32).collect();
        let scores = self.scores(&q);
        top_k(&scores, k, &[])
    }
}

fn rank_order(a: &(u32, f64), b: &(u32, f64)) -> Ordering {
    b.1.partial_cmp(&a.1)
        .unwrap_or(Ordering::Equal)
        .then(a.0.cmp(&b.0))
}

fn top_k(scores: &[f64], k: usize, exclude: &[u32]) -> Vec<(u32, f64)> {
    let mut all: Vec<(u32, f64)> = scores
        .iter()
        .enumerate()
        .map(|(i, &s)| (i as u32, s))
        .filter(|(i, _)| !exclude.contains(i))
        .collect();
    let k = k.min(all.len());
    if k == 0 {
        return Vec::new();
    }
    if k < all.len() {
        all.select_nth_unstable_by(k - 1, rank_order);
        all.truncate(k);
    }
    all.sort_by(rank_order);
    all
}

/// Nearest vocabulary words to a query token. The query's own word, if in
/// the vocabulary, is a candidate like any other.
pub fn knn<F: Real>(
    model: &EmbeddingModel<F>,
    index: &WordIndex,
    token: &str,
    k: usize,
) -> Vec<(String, f64)> {
    index
        .nearest(&represent(model, token), k)
        .into_iter()
        .map(|(id, s)| (String::from(model.vocab().word(id)), s))
        .collect()
}

/// Spearman correlation between model cosine and human scores. No row is
/// skipped: every token has a (possibly zero) representation.
pub fn eval_similarity<F: Real>(
    model: &EmbeddingModel<F>,
    rows: &[SimilarityRow],
    mode: Mode,
) -> EvalReport {
    let mut pred = Vec::with_capacity(rows.len());
    for row in rows {
        let a = represent(model, &row.a);
        let b_id = model.vocab().id(&row.b);
        let s = match (mode, b_id) {
            (Mode::InOut, Some(id)) => cosine(&a, model.output().row(id as usize)),
            _ => cosine(&a, &represent(model, &row.b)),
        };
        pred.push(s);
    }
    let human: Vec<f64> = rows.iter().map(|r| r.score).collect();
    EvalReport {
        task: String::from("similarity"),
        metrics: vec![(String::from("spearman"), spearman(&pred, &human))],
        evaluated: rows.len(),
        skipped: 0,
    }
}

/// 3CosAdd over unit-normalized representations: the answer is the word of
/// `V \ {A, B, C}` closest to `B - A + C`. Rows whose `D` is not in the
/// vocabulary are skipped.
pub fn eval_analogy<F: Real>(
    model: &EmbeddingModel<F>,
    index: &WordIndex,
    rows: &[AnalogyRow],
) -> EvalReport {
    let dim = model.dim();
    let mut correct = [0usize; 2];
    let mut total = [0usize; 2];
    let mut skipped = 0;
    for row in rows {
        let Some(d) = model.vocab().id(&row.d) else {
            skipped += 1;
            continue;
        };
        let unit = |w: &str| -> Vec<f32> {
            match model.vocab().id(w) {
                Some(id) => index.row(id).to_vec(),
                None => normalized(&represent(model, w)),
            }
        };
        let (a, b, c) = (unit(&row.a), unit(&row.b), unit(&row.c));
        let mut query = vec![0.0f32; dim];
        for i in 0..dim {
            query[i] = b[i] - a[i] + c[i];
        }
        let exclude: Vec<u32> = [&row.a, &row.b, &row.c]
            .iter()
            .filter_map(|w| model.vocab().id(w))
            .collect();
        let scores = index.scores(&query);
        let best = top_k(&scores, 1, &exclude);
        let s = match row.section {
            Section::Semantic => 0,
            Section::Syntactic => 1,
        };
        total[s] += 1;
        if best.first().map(|b| b.0) == Some(d) {
            correct[s] += 1;
        }
    }
    let acc = |c: usize, t: usize| if t == 0 { 0.0 } else { c as f64 / t as f64 };
    EvalReport {
        task: String::from("analogy"),
        metrics: vec![
            (String::from("semantic"), acc(correct[0], total[0])),
            (String::from("syntactic"), acc(correct[1], total[1])),
            (String::from("accuracy"), acc(correct[0] + correct[1], total[0] + total[1])),
        ],
        evaluated: total[0] + total[1],
        skipped,
    }
}

/// MRR and coverage of the expected word within the `k` nearest neighbors
/// of each misspelling. An absent expected word scores 0. Pairs whose
/// expected word is not in the vocabulary are skipped.
pub fn neighborhood_validity<F: Real>(
    model: &EmbeddingModel<F>,
    index: &WordIndex,
    pairs: &[MisspellingPair],
    k: usize,
) -> EvalReport {
    let mut rr_sum = 0.0;
    let mut hits = 0usize;
    let mut evaluated = 0usize;
    let mut skipped = 0usize;
    for pair in pairs {
        let Some(expected) = model.vocab().id(&pair.expected) else {
            skipped += 1;
            continue;
        };
        evaluated += 1;
        let neighbors = index.nearest(&represent(model, &pair.misspelling), k);
        if let Some(pos) = neighbors.iter().position(|n| n.0 == expected) {
            rr_sum += 1.0 / (pos + 1) as f64;
            hits += 1;
        }
    }
    let n = evaluated.max(1) as f64;
    EvalReport {
        task: alloc::format!("neighborhood@{k}"),
        metrics: vec![
            (String::from("mrr"), rr_sum / n),
            (String::from("coverage"), hits as f64 / n),
        ],
        evaluated,
        skipped,
    }
}
