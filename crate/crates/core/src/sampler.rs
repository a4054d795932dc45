//! Negative sampling from the unigram distribution raised to 3/4.

use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;

use crate::vocab::Vocabulary;

pub const DEFAULT_POWER: f64 = 0.75;

/// Cumulative table over vocabulary ids with weights `count^power`.
#[derive(Debug, Clone)]
pub struct NegativeSampler {
    cumulative: Vec<f64>,
}

impl NegativeSampler {
    pub fn new(vocab: &Vocabulary) -> Self {
        Self::from_counts(vocab.counts(), DEFAULT_POWER)
    }

    pub fn from_counts(counts: &[u64], power: f64) -> Self {
        let mut acc = 0.0;
        let cumulative = counts
            .iter()
            .map(|&c| {
                acc += Float::powf(c as f64, power);
                acc
            })
            .collect();
        NegativeSampler { cumulative }
    }

    pub fn len(&self) -> usize {
        self.cumulative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative.is_empty()
    }

    fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// Normalized sampling probability of one id.
    pub fn probability(&self, id: u32) -> f64 {
        self.weight(id) / self.total()
    }

    fn weight(&self, id: u32) -> f64 {
        let i = id as usize;
        let prev = if i == 0 { 0.0 } else { self.cumulative[i - 1] };
        self.cumulative[i] - prev
    }

    /// One unrestricted draw.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u = rng.random::<f64>() * self.total();
        let i = self.cumulative.partition_point(|&c| c <= u);
        i.min(self.cumulative.len() - 1) as u32
    }

    /// Draws `count` ids i.i.d., rejecting any id in `exclude`, and appends
    /// them to `out`. Draws nothing when `exclude` covers the whole support.
    /// Returns the number of ids appended.
    pub fn draw_negatives<R: Rng + ?Sized>(
        &self,
        count: usize,
        exclude: &[u32],
        rng: &mut R,
        out: &mut Vec<u32>,
    ) -> usize {
        if count == 0 || self.is_empty() {
            return 0;
        }
        let mut excluded_mass = 0.0;
        for (i, &e) in exclude.iter().enumerate() {
            if (e as usize) < self.len() && !exclude[..i].contains(&e) {
                excluded_mass += self.weight(e);
            }
        }
        if self.total() - excluded_mass <= self.total() * 1e-12 {
            return 0;
        }
        for _ in 0..count {
            let id = loop {
                let id = self.sample(rng);
                if !exclude.contains(&id) {
                    break id;
                }
            };
            out.push(id);
        }
        count
    }
}
