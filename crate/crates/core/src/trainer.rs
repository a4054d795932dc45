//! Joint optimization schedule for the semantic and spell-correction
//! objectives.
//!
//! The corpus drives a token clock. Every `k = max(1, floor(|T| / |M|))`
//! in-vocabulary tokens, one misspelling pair is consumed, so over an epoch
//! each pair receives about one update and a single update of either
//! objective carries the same importance. `alpha` and `1 - alpha` are
//! applied as per-update gradient weights. The learning rate decays
//! linearly over `epochs * |T|` tokens.
//!
//! A [`Worker`] owns its random streams and its slice of the misspelling
//! set; several workers may share one parameter store.

use alloc::vec::Vec;
use core::sync::atomic::{AtomicU64, Ordering};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::ConfigError;
use crate::misspell::MisspellingPair;
use crate::model::{example_loss, sgns_update, Branch, Parameters, Scratch, TrainingExample};
use crate::real::Real;
use crate::sampler::NegativeSampler;
use crate::subword::{misspelling_input_ids, NgramConfig, SubwordTable};
use crate::vocab::{SubsamplingPolicy, Vocabulary, DEFAULT_SUBSAMPLE};

/// Mixing weights from the published hyperparameter sweep, plus the
/// `alpha = 0` baseline.
pub const ALPHA_GRID: [f64; 9] = [0.0, 0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.95, 0.99];

/// Floor applied to the decayed learning rate, relative to `lr0`.
pub const MIN_LR_FRACTION: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    /// Weight of the spell-correction objective, in `[0, 1]`.
    pub alpha: f64,
    pub dim: usize,
    pub epochs: u32,
    pub lr0: f64,
    /// Maximum context radius.
    pub window: usize,
    /// Negatives per positive, for both objectives.
    pub negatives: usize,
    pub ngram: NgramConfig,
    pub min_count: u64,
    /// Subsampling threshold on relative frequency.
    pub subsample: f64,
    pub workers: usize,
    pub seed: u64,
    /// Average composed inputs instead of summing them.
    pub normalize: bool,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            alpha: 0.05,
            dim: 300,
            epochs: 5,
            lr0: 0.05,
            window: 5,
            negatives: 5,
            ngram: NgramConfig::default(),
            min_count: 5,
            subsample: DEFAULT_SUBSAMPLE,
            workers: 1,
            seed: 0,
            normalize: true,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(ConfigError::Alpha(self.alpha));
        }
        self.ngram.validate()?;
        let bad = |msg: &str| Err(ConfigError::Invalid(alloc::string::String::from(msg)));
        if self.dim == 0 {
            return bad("dim must be positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        if !(self.lr0 > 0.0 && self.lr0.is_finite()) {
            return bad("learning rate must be positive");
        }
        if self.min_count == 0 {
            return Err(ConfigError::ZeroMinCount);
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        if self.subsample.is_nan() || self.subsample <= 0.0 {
            return bad("subsampling threshold must be positive");
        }
        Ok(())
    }
}

/// Corpus tokens between two spell-correction updates.
pub fn interleave_period(total_tokens: u64, pairs: u64) -> u64 {
    if pairs == 0 {
        return u64::MAX;
    }
    (total_tokens / pairs).max(1)
}

/// Linear decay from `lr0` to `lr0 * MIN_LR_FRACTION` over a token budget.
#[derive(Debug, Clone, Copy)]
pub struct LearningRate {
    pub lr0: f64,
    pub budget: u64,
}

impl LearningRate {
    pub fn new(lr0: f64, budget: u64) -> Self {
        LearningRate { lr0, budget }
    }

    pub fn at(&self, processed: u64) -> f64 {
        let frac = 1.0 - processed as f64 / self.budget.max(1) as f64;
        self.lr0 * frac.max(MIN_LR_FRACTION)
    }
}

/// Context positions around a center, center excluded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContextWindow {
    pub start: usize,
    pub end: usize,
    pub center: usize,
}

impl ContextWindow {
    pub fn positions(&self) -> impl Iterator<Item = usize> + '_ {
        let c = self.center;
        (self.start..self.end).filter(move |&p| p != c)
    }

    pub fn len(&self) -> usize {
        self.end - self.start - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Draws an effective radius uniformly from `1..=window` and clips it to
/// the sequence `0..len`.
pub fn context_window<R: Rng + ?Sized>(
    position: usize,
    len: usize,
    window: usize,
    rng: &mut R,
) -> ContextWindow {
    let radius = rng.random_range(1..=window);
    ContextWindow {
        start: position.saturating_sub(radius),
        end: (position + radius + 1).min(len),
        center: position,
    }
}

/// A misspelling pair resolved to matrix rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScPair {
    /// n-gram rows of the misspelling, never its word row.
    pub rows: Vec<u32>,
    pub target: u32,
    /// The misspelling's own id when it is itself a vocabulary word.
    pub misspelling_id: Option<u32>,
}

#[derive(Debug, Clone, Default)]
pub struct PreparedPairs {
    pub pairs: Vec<ScPair>,
    /// Expected word not in the vocabulary.
    pub invalid: usize,
    /// Misspelling without any n-gram.
    pub degenerate: usize,
}

pub fn prepare_pairs(
    pairs: &[MisspellingPair],
    vocab: &Vocabulary,
    ngram: &NgramConfig,
) -> PreparedPairs {
    let mut out = PreparedPairs::default();
    for pair in pairs {
        let Some(target) = vocab.id(&pair.expected) else {
            out.invalid += 1;
            continue;
        };
        let rows = misspelling_input_ids(&pair.misspelling, vocab.len(), ngram).buckets;
        if rows.is_empty() {
            out.degenerate += 1;
            continue;
        }
        out.pairs.push(ScPair {
            rows,
            target,
            misspelling_id: vocab.id(&pair.misspelling),
        });
    }
    out
}

/// Per-epoch counters of one worker.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EpochStats {
    /// In-vocabulary tokens read, before subsampling.
    pub tokens: u64,
    /// Tokens that survived subsampling.
    pub kept: u64,
    pub ft_updates: u64,
    pub sc_updates: u64,
    pub ft_loss_sum: f64,
    pub sc_loss_sum: f64,
}

impl EpochStats {
    pub fn merge(&mut self, other: &EpochStats) {
        self.tokens += other.tokens;
        self.kept += other.kept;
        self.ft_updates += other.ft_updates;
        self.sc_updates += other.sc_updates;
        self.ft_loss_sum += other.ft_loss_sum;
        self.sc_loss_sum += other.sc_loss_sum;
    }

    pub fn mean_ft_loss(&self) -> f64 {
        mean(self.ft_loss_sum, self.ft_updates)
    }

    pub fn mean_sc_loss(&self) -> f64 {
        mean(self.sc_loss_sum, self.sc_updates)
    }
}

fn mean(sum: f64, n: u64) -> f64 {
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Counters shared by all workers.
#[derive(Debug, Default)]
pub struct SharedProgress {
    tokens: AtomicU64,
    sc_updates: AtomicU64,
}

impl SharedProgress {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn tokens(&self) -> u64 {
        self.tokens.load(Ordering::Relaxed)
    }

    pub fn sc_updates(&self) -> u64 {
        self.sc_updates.load(Ordering::Relaxed)
    }

    pub fn add(&self, tokens: u64, sc_updates: u64) {
        self.tokens.fetch_add(tokens, Ordering::Relaxed);
        self.sc_updates.fetch_add(sc_updates, Ordering::Relaxed);
    }
}

/// Read-only state shared by the workers of one run.
#[derive(Debug, Clone, Copy)]
pub struct Shared<'a> {
    pub table: &'a SubwordTable,
    pub sampler: &'a NegativeSampler,
    pub policy: &'a SubsamplingPolicy,
}

/// One training thread: its random streams, its misspelling slice and its
/// own interleave counter.
pub struct Worker<'a, F, R> {
    shared: Shared<'a>,
    window: usize,
    negatives: usize,
    normalize: bool,
    ft_weight: F,
    sc_weight: F,
    period: u64,
    pairs: &'a [ScPair],
    order: Vec<u32>,
    cursor: usize,
    counter: u64,
    ft_rng: R,
    sc_rng: R,
    scratch: Scratch<F>,
    negs: Vec<u32>,
    kept: Vec<u32>,
    marks: Vec<usize>,
    stats: EpochStats,
}

impl<'a, F: Real, R: Rng> Worker<'a, F, R> {
    /// With `alpha == 0` or no pairs, no spell-correction update is ever
    /// scheduled and `sc_rng` is never used. `period` comes from
    /// [`interleave_period`] over the whole corpus and pair set.
    pub fn new(
        config: &TrainingConfig,
        shared: Shared<'a>,
        pairs: &'a [ScPair],
        period: u64,
        ft_rng: R,
        sc_rng: R,
    ) -> Self {
        Worker {
            shared,
            window: config.window,
            negatives: config.negatives,
            normalize: config.normalize,
            ft_weight: F::of_f64(1.0 - config.alpha),
            sc_weight: F::of_f64(config.alpha),
            period: period.max(1),
            pairs: if config.alpha > 0.0 { pairs } else { &[] },
            order: (0..pairs.len() as u32).collect(),
            cursor: 0,
            counter: 0,
            ft_rng,
            sc_rng,
            scratch: Scratch::new(config.dim),
            negs: Vec::with_capacity(config.negatives),
            kept: Vec::new(),
            marks: Vec::new(),
            stats: EpochStats::default(),
        }
    }

    fn sc_enabled(&self) -> bool {
        !self.pairs.is_empty()
    }

    /// Resets the interleave counter and reshuffles this worker's pairs.
    pub fn begin_epoch(&mut self) {
        self.counter = 0;
        self.cursor = 0;
        self.stats = EpochStats::default();
        if self.sc_enabled() {
            self.order.truncate(self.pairs.len());
            self.order.shuffle(&mut self.sc_rng);
        }
    }

    pub fn stats(&self) -> &EpochStats {
        &self.stats
    }

    pub fn finish_epoch(&mut self) -> EpochStats {
        core::mem::take(&mut self.stats)
    }

    /// Trains on one span of in-vocabulary token ids (before subsampling).
    /// Context windows never cross the span boundaries.
    pub fn process_chunk<P: Parameters<F> + ?Sized>(&mut self, params: &mut P, chunk: &[u32], lr: F) {
        self.kept.clear();
        self.marks.clear();
        let sc = self.sc_enabled();
        for &id in chunk {
            if self.shared.policy.keep(id, &mut self.ft_rng) {
                self.kept.push(id);
            }
            if sc && self.counter % self.period == 0 {
                // fires after the semantic updates of the kept tokens so far
                self.marks.push(self.kept.len());
            }
            self.counter += 1;
        }
        self.stats.tokens += chunk.len() as u64;
        self.stats.kept += self.kept.len() as u64;

        let mut next_mark = 0;
        let fire_upto = |this: &mut Self, params: &mut P, done: usize, next: &mut usize| {
            while *next < this.marks.len() && this.marks[*next] <= done {
                this.sc_step(params, lr);
                *next += 1;
            }
        };
        fire_upto(self, params, 0, &mut next_mark);
        for pos in 0..self.kept.len() {
            if self.ft_weight != F::zero() {
                self.ft_step(params, pos, lr);
            }
            fire_upto(self, params, pos + 1, &mut next_mark);
        }
    }

    fn ft_step<P: Parameters<F> + ?Sized>(&mut self, params: &mut P, pos: usize, lr: F) {
        let center = self.kept[pos];
        let inputs = self.shared.table.rows(center);
        let win = context_window(pos, self.kept.len(), self.window, &mut self.ft_rng);
        for c in win.positions() {
            let target = self.kept[c];
            self.negs.clear();
            self.shared
                .sampler
                .draw_negatives(self.negatives, &[target], &mut self.ft_rng, &mut self.negs);
            let example = TrainingExample {
                inputs,
                target,
                negatives: &self.negs,
                branch: Branch::Ft,
            };
            let loss = sgns_update(params, &example, self.normalize, lr, self.ft_weight, &mut self.scratch);
            self.stats.ft_updates += 1;
            self.stats.ft_loss_sum += loss.as_f64();
        }
    }

    fn sc_step<P: Parameters<F> + ?Sized>(&mut self, params: &mut P, lr: F) {
        if self.cursor == self.order.len() {
            self.cursor = 0;
        }
        let pair = &self.pairs[self.order[self.cursor] as usize];
        self.cursor += 1;
        let exclude = [pair.target, pair.misspelling_id.unwrap_or(pair.target)];
        self.negs.clear();
        self.shared
            .sampler
            .draw_negatives(self.negatives, &exclude, &mut self.sc_rng, &mut self.negs);
        let example = TrainingExample {
            inputs: &pair.rows,
            target: pair.target,
            negatives: &self.negs,
            branch: Branch::Sc,
        };
        let loss = sgns_update(params, &example, self.normalize, lr, self.sc_weight, &mut self.scratch);
        self.stats.sc_updates += 1;
        self.stats.sc_loss_sum += loss.as_f64();
    }
}

/// Runs a worker over a sequence of spans, reading the learning rate from
/// the shared token clock before each span.
pub fn run_spans<'c, F, R, P, I>(
    params: &mut P,
    worker: &mut Worker<'_, F, R>,
    spans: I,
    schedule: &LearningRate,
    progress: &SharedProgress,
) where
    F: Real,
    R: Rng,
    P: Parameters<F> + ?Sized,
    I: IntoIterator<Item = &'c [u32]>,
{
    for span in spans {
        let lr = F::of_f64(schedule.at(progress.tokens()));
        let before = worker.stats().sc_updates;
        worker.process_chunk(params, span, lr);
        progress.add(span.len() as u64, worker.stats().sc_updates - before);
    }
}

/// Mean spell-correction loss over `pairs`, with fresh negatives.
pub fn mean_sc_loss<F, P, R>(
    params: &P,
    pairs: &[ScPair],
    sampler: &NegativeSampler,
    negatives: usize,
    normalize: bool,
    rng: &mut R,
) -> f64
where
    F: Real,
    P: Parameters<F> + ?Sized,
    R: Rng + ?Sized,
{
    if pairs.is_empty() {
        return 0.0;
    }
    let mut negs = Vec::with_capacity(negatives);
    let mut sum = 0.0;
    for pair in pairs {
        negs.clear();
        let exclude = [pair.target, pair.misspelling_id.unwrap_or(pair.target)];
        sampler.draw_negatives(negatives, &exclude, rng, &mut negs);
        let example = TrainingExample {
            inputs: &pair.rows,
            target: pair.target,
            negatives: &negs,
            branch: Branch::Sc,
        };
        sum += example_loss(params, &example, normalize).as_f64();
    }
    sum / pairs.len() as f64
}
