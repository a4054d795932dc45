//! Training driver: vocabulary, pair preparation, worker threads,
//! checkpoints and the training report.
//!
//! Random streams, all derived from the configured seed: stream 0
//! initializes the input matrix, stream 1 shuffles the misspelling pairs
//! before they are dealt to workers, and worker `w` uses streams `2 + 2w`
//! for the corpus objective and `3 + 2w` for spell correction.

use std::io::Write;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use spellvec_core::misspell::MisspellingPair;
use spellvec_core::sampler::NegativeSampler;
use spellvec_core::subword::SubwordTable;
use spellvec_core::trainer::{
    interleave_period, prepare_pairs, EpochStats, LearningRate, ScPair, Shared, SharedProgress,
    TrainingConfig, Worker,
};
use spellvec_core::vocab::SubsamplingPolicy;
use spellvec_core::{ConfigError, EmbeddingModel, Parameters, Vocabulary};

use crate::corpus::{build_vocabulary, split_ranges, SpanReader};
use crate::error::Result;
use crate::formats::{save_model, write_atomic};
use crate::hogwild::SharedModel;

pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Default)]
pub struct TrainOptions {
    pub config: TrainingConfig,
    /// Directory receiving a model and a progress file after every epoch.
    pub checkpoint_dir: Option<PathBuf>,
    /// Log per-epoch progress.
    pub verbose: bool,
}

/// Snapshot written next to every checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingProgress {
    pub epoch: u32,
    pub tokens: u64,
    pub pairs: u64,
    pub lr: f64,
    pub mean_ft_loss: f64,
    pub mean_sc_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochReport {
    pub epoch: u32,
    pub tokens: u64,
    pub kept_tokens: u64,
    pub ft_updates: u64,
    pub sc_updates: u64,
    pub mean_ft_loss: f64,
    pub mean_sc_loss: f64,
    pub lr_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCounts {
    pub given: usize,
    pub used: usize,
    /// Expected word not in the vocabulary.
    pub invalid: usize,
    /// Misspelling without n-grams.
    pub degenerate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSummary {
    pub alpha: f64,
    pub dim: usize,
    pub epochs: u32,
    pub lr0: f64,
    pub window: usize,
    pub negatives: usize,
    pub minn: usize,
    pub maxn: usize,
    pub buckets: u32,
    pub boundary_markers: bool,
    pub min_count: u64,
    pub subsample: f64,
    pub workers: usize,
    pub seed: u64,
    pub normalize: bool,
}

impl From<&TrainingConfig> for ConfigSummary {
    fn from(c: &TrainingConfig) -> Self {
        ConfigSummary {
            alpha: c.alpha,
            dim: c.dim,
            epochs: c.epochs,
            lr0: c.lr0,
            window: c.window,
            negatives: c.negatives,
            minn: c.ngram.minn,
            maxn: c.ngram.maxn,
            buckets: c.ngram.bucket_count,
            boundary_markers: c.ngram.boundary_markers,
            min_count: c.min_count,
            subsample: c.subsample,
            workers: c.workers,
            seed: c.seed,
            normalize: c.normalize,
        }
    }
}

/// Machine-readable training summary. Contains no wall-clock values, so
/// single-worker runs with the same inputs produce identical reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub config: ConfigSummary,
    /// Whether the spell-correction objective was wired in at all.
    pub joint: bool,
    pub vocab_size: usize,
    pub total_tokens: u64,
    pub pairs: PairCounts,
    pub interleave_period: Option<u64>,
    pub epochs: Vec<EpochReport>,
    pub final_progress: TrainingProgress,
}

pub struct Trained {
    pub model: EmbeddingModel<f32>,
    pub report: TrainingReport,
}

/// Joint training of both objectives. `pairs` may be empty when
/// `alpha == 0`.
pub fn train(corpus: &Path, pairs: &[MisspellingPair], opts: &TrainOptions) -> Result<Trained> {
    opts.config.validate()?;
    let vocab = build_vocabulary(corpus, opts.config.min_count)?;
    train_with_vocab(corpus, vocab, Some(pairs), opts)
}

/// The corpus objective alone: no misspelling set is read and no
/// spell-correction update is ever scheduled, whatever `alpha` says.
pub fn train_fasttext(corpus: &Path, opts: &TrainOptions) -> Result<Trained> {
    let mut opts = opts.clone();
    opts.config.alpha = 0.0;
    opts.config.validate()?;
    let vocab = build_vocabulary(corpus, opts.config.min_count)?;
    train_with_vocab(corpus, vocab, None, &opts)
}

/// Like [`train`] with a vocabulary computed beforehand from the same
/// corpus.
pub fn train_with_vocab(
    corpus: &Path,
    vocab: Vocabulary,
    pairs: Option<&[MisspellingPair]>,
    opts: &TrainOptions,
) -> Result<Trained> {
    let cfg = &opts.config;
    cfg.validate()?;
    let joint = pairs.is_some() && cfg.alpha > 0.0;

    let mut counts = PairCounts {
        given: pairs.map_or(0, <[_]>::len),
        used: 0,
        invalid: 0,
        degenerate: 0,
    };
    let mut sc_pairs: Vec<ScPair> = Vec::new();
    if joint {
        let prepared = prepare_pairs(pairs.unwrap_or_default(), &vocab, &cfg.ngram);
        counts.invalid = prepared.invalid;
        counts.degenerate = prepared.degenerate;
        sc_pairs = prepared.pairs;
        if sc_pairs.is_empty() {
            return Err(ConfigError::NoMisspellings.into());
        }
        sc_pairs.shuffle(&mut rng_stream(cfg.seed, 1));
        counts.used = sc_pairs.len();
    } else if cfg.alpha > 0.0 {
        return Err(ConfigError::NoMisspellings.into());
    }

    let total = vocab.total_tokens();
    let period = joint.then(|| interleave_period(total, sc_pairs.len() as u64));
    let table = SubwordTable::new(&vocab, &cfg.ngram);
    let sampler = NegativeSampler::new(&vocab);
    let policy = SubsamplingPolicy::new(&vocab, cfg.subsample);
    let shared = Shared {
        table: &table,
        sampler: &sampler,
        policy: &policy,
    };
    let ranges = split_ranges(corpus, cfg.workers)?;
    let slice_len = sc_pairs.len().div_ceil(cfg.workers);
    let mut workers = Vec::with_capacity(cfg.workers);
    for w in 0..cfg.workers {
        let start = (w * slice_len).min(sc_pairs.len());
        let slice = &sc_pairs[start..(start + slice_len).min(sc_pairs.len())];
        workers.push(Worker::new(
            cfg,
            shared,
            slice,
            period.unwrap_or(u64::MAX),
            rng_stream(cfg.seed, 2 + 2 * w as u64),
            rng_stream(cfg.seed, 3 + 2 * w as u64),
        ));
    }

    let schedule = LearningRate::new(cfg.lr0, cfg.epochs as u64 * total);
    let progress = SharedProgress::new();
    let mut init = rng_stream(cfg.seed, 0);
    let model = EmbeddingModel::initialized(vocab.clone(), cfg.ngram, cfg.dim, cfg.normalize, &mut init);
    let mut store = if cfg.workers == 1 {
        Store::Exclusive(model)
    } else {
        Store::Shared(SharedModel::new(model))
    };

    let mut epochs = Vec::new();
    let mut last = None;
    for epoch in 1..=cfg.epochs {
        let started = Instant::now();
        let stats = match &mut store {
            Store::Exclusive(model) => run_worker(
                corpus,
                ranges[0].clone(),
                &vocab,
                model,
                &mut workers[0],
                &schedule,
                &progress,
            )?,
            Store::Shared(shared_model) => run_parallel(
                corpus,
                &ranges,
                &vocab,
                shared_model,
                &mut workers,
                &schedule,
                &progress,
            )?,
        };
        let finite = match &store {
            Store::Exclusive(m) => m.all_finite(),
            Store::Shared(s) => s.all_finite(),
        };
        assert!(finite, "non-finite parameter after epoch {epoch}");
        let lr_end = schedule.at(progress.tokens());
        let report = EpochReport {
            epoch,
            tokens: stats.tokens,
            kept_tokens: stats.kept,
            ft_updates: stats.ft_updates,
            sc_updates: stats.sc_updates,
            mean_ft_loss: stats.mean_ft_loss(),
            mean_sc_loss: stats.mean_sc_loss(),
            lr_end,
        };
        let snap = TrainingProgress {
            epoch,
            tokens: progress.tokens(),
            pairs: progress.sc_updates(),
            lr: lr_end,
            mean_ft_loss: report.mean_ft_loss,
            mean_sc_loss: report.mean_sc_loss,
        };
        if opts.verbose {
            log::info!(
                "epoch {epoch}/{}: {} tokens, ft loss {:.4}, sc loss {:.4} ({} updates), lr {:.6}, {:.1}s",
                cfg.epochs,
                stats.tokens,
                report.mean_ft_loss,
                report.mean_sc_loss,
                stats.sc_updates,
                lr_end,
                started.elapsed().as_secs_f64()
            );
        }
        if let Some(dir) = &opts.checkpoint_dir {
            match &store {
                Store::Exclusive(m) => write_checkpoint(dir, epoch, m, &snap)?,
                Store::Shared(s) => write_checkpoint(dir, epoch, &s.snapshot(), &snap)?,
            }
        }
        epochs.push(report);
        last = Some(snap);
    }

    let model = match store {
        Store::Exclusive(m) => m,
        Store::Shared(s) => s.into_model(),
    };
    let report = TrainingReport {
        config: cfg.into(),
        joint,
        vocab_size: model.vocab().len(),
        total_tokens: total,
        pairs: counts,
        interleave_period: period,
        epochs,
        final_progress: last.expect("at least one epoch"),
    };
    Ok(Trained { model, report })
}

enum Store {
    Exclusive(EmbeddingModel<f32>),
    Shared(SharedModel),
}

fn run_worker<P: Parameters<f32>>(
    corpus: &Path,
    range: Range<u64>,
    vocab: &Vocabulary,
    params: &mut P,
    worker: &mut Worker<'_, f32, ChaCha8Rng>,
    schedule: &LearningRate,
    progress: &SharedProgress,
) -> Result<EpochStats> {
    worker.begin_epoch();
    let mut reader = SpanReader::open(corpus, range, vocab)?;
    while let Some(span) = reader.next_span()? {
        let lr = schedule.at(progress.tokens()) as f32;
        let before = worker.stats().sc_updates;
        worker.process_chunk(params, span, lr);
        progress.add(span.len() as u64, worker.stats().sc_updates - before);
    }
    Ok(worker.finish_epoch())
}

fn run_parallel(
    corpus: &Path,
    ranges: &[Range<u64>],
    vocab: &Vocabulary,
    model: &SharedModel,
    workers: &mut [Worker<'_, f32, ChaCha8Rng>],
    schedule: &LearningRate,
    progress: &SharedProgress,
) -> Result<EpochStats> {
    let results: Vec<Result<EpochStats>> = std::thread::scope(|s| {
        let handles: Vec<_> = workers
            .iter_mut()
            .zip(ranges)
            .map(|(worker, range)| {
                let mut view = model.view();
                s.spawn(move || {
                    run_worker(corpus, range.clone(), vocab, &mut view, worker, schedule, progress)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("training worker panicked"))
            .collect()
    });
    let mut total = EpochStats::default();
    for r in results {
        total.merge(&r?);
    }
    Ok(total)
}

pub fn checkpoint_paths(dir: &Path, epoch: u32) -> (PathBuf, PathBuf) {
    (
        dir.join(format!("epoch-{epoch}.bin")),
        dir.join(format!("epoch-{epoch}.json")),
    )
}

fn write_checkpoint(
    dir: &Path,
    epoch: u32,
    model: &EmbeddingModel<f32>,
    progress: &TrainingProgress,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| crate::Error::io(dir, e))?;
    let (bin, json) = checkpoint_paths(dir, epoch);
    save_model(&bin, model)?;
    save_json(&json, progress)
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)
    })
}
