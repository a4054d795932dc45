use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use spellvec::core::eval::{knn, Mode, WordIndex};
use spellvec::core::misspell::{
    generate_dataset, generate_variant, mine_error_model, misspell_analogy_rows,
    misspell_similarity_rows, MisspellingPair,
};
use spellvec::core::trainer::{TrainingConfig, ALPHA_GRID};
use spellvec::core::vocab::DEFAULT_SUBSAMPLE;
use spellvec::core::{ConfigError, NgramConfig};
use spellvec::train::{save_json, train, train_fasttext, TrainOptions};
use spellvec::{corpus, evaluate, formats, synth, Error};

/// Subword embeddings trained jointly with a spell-correction objective.
#[derive(Parser)]
#[command(name = "spellvec", version)]
struct Cli {
    /// Suppress progress logging.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model on a corpus and an optional misspelling set.
    Train(TrainArgs),
    /// Mine a character error model from correction pairs.
    Mine(MineArgs),
    /// Generate a misspelling set, or misspelled variants of an evaluation file.
    Generate(GenerateArgs),
    /// Evaluate a model.
    Eval(EvalArgs),
    /// Nearest vocabulary words of a token.
    Nn(NnArgs),
    /// Count a corpus and write its vocabulary.
    Vocab(VocabArgs),
    /// Train and evaluate over a grid of alpha values.
    Sweep(SweepArgs),
    /// Write synthetic data.
    Synth(SynthArgs),
}

#[derive(Args, Clone)]
struct Hyper {
    /// Weight of the spell-correction loss, in [0, 1].
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Vector dimension.
    #[arg(long, default_value_t = 300)]
    dim: usize,
    #[arg(long, default_value_t = 5)]
    epochs: u32,
    /// Initial learning rate, decayed linearly to zero.
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
    /// Maximum context radius.
    #[arg(long, default_value_t = 5)]
    window: usize,
    /// Negatives per positive example.
    #[arg(long, default_value_t = 5)]
    neg: usize,
    /// Shortest character n-gram.
    #[arg(long, default_value_t = 3)]
    minn: usize,
    /// Longest character n-gram.
    #[arg(long, default_value_t = 6)]
    maxn: usize,
    /// Number of hashed n-gram rows.
    #[arg(long, default_value_t = 2_000_000)]
    buckets: u32,
    /// Minimum corpus count of a vocabulary word.
    #[arg(long, default_value_t = 5)]
    min_count: u64,
    /// Subsampling threshold on relative word frequency.
    #[arg(long, default_value_t = DEFAULT_SUBSAMPLE)]
    subsample: f64,
    /// Worker threads.
    #[arg(long, env = "SPELLVEC_THREADS", default_value_t = 1)]
    threads: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sum composed vectors instead of averaging them.
    #[arg(long)]
    unnormalized: bool,
    /// Wrap tokens in '<' and '>' before extracting n-grams.
    #[arg(long)]
    boundary_markers: bool,
}

impl Hyper {
    fn config(&self) -> TrainingConfig {
        TrainingConfig {
            alpha: self.alpha,
            dim: self.dim,
            epochs: self.epochs,
            lr0: self.lr,
            window: self.window,
            negatives: self.neg,
            ngram: NgramConfig {
                minn: self.minn,
                maxn: self.maxn,
                bucket_count: self.buckets,
                boundary_markers: self.boundary_markers,
            },
            min_count: self.min_count,
            subsample: self.subsample,
            workers: self.threads,
            seed: self.seed,
            normalize: !self.unnormalized,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Whitespace-tokenized text, one sentence per line.
    #[arg(long)]
    corpus: PathBuf,
    /// Misspelling set, `misspelling<TAB>word` per line.
    #[arg(long)]
    misspellings: Option<PathBuf>,
    /// Output prefix; writes PREFIX.bin, PREFIX.vec and PREFIX.json.
    #[arg(long, short)]
    output: PathBuf,
    /// Write a checkpoint after every epoch into this directory.
    #[arg(long)]
    checkpoint_dir: Option<PathBuf>,
    /// Train the corpus objective only, ignoring alpha and misspellings.
    #[arg(long)]
    ft_only: bool,
    /// Skip the text vectors export.
    #[arg(long)]
    no_vec: bool,
    #[command(flatten)]
    hyper: Hyper,
}

#[derive(Args)]
struct MineArgs {
    /// Correction pairs, `original<TAB>corrected` per line.
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantFormat {
    /// One word per line; writes `misspelling<TAB>word`.
    Words,
    /// `word_a<TAB>word_b<TAB>score`.
    Similarity,
    /// Analogy file with `: section` headers.
    Analogy,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    error_model: PathBuf,
    /// Corpus to count words from (dataset mode).
    #[arg(long, conflicts_with = "vocab")]
    corpus: Option<PathBuf>,
    /// Vocabulary file, `word<TAB>count` (dataset mode).
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    min_count: u64,
    /// Edit-distance ratio; switches to variant mode over --input.
    #[arg(long, requires = "input")]
    r: Option<f64>,
    /// Evaluation file to misspell (variant mode).
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = VariantFormat::Words)]
    format: VariantFormat,
    /// Rejection-sampling attempts per word before keeping it unchanged.
    #[arg(long, default_value_t = 1000)]
    max_attempts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Task {
    Similarity,
    Analogy,
    Neighborhood,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    InIn,
    InOut,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::InIn => Mode::InIn,
            ModeArg::InOut => Mode::InOut,
        }
    }
}

#[derive(Args)]
struct EvalArgs {
    #[arg(value_enum)]
    task: Task,
    #[arg(long)]
    model: PathBuf,
    /// Dataset file in the format of the task.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::InIn)]
    mode: ModeArg,
    /// Neighborhood size.
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Also write the report as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct NnArgs {
    token: String,
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::InIn)]
    mode: ModeArg,
}

#[derive(Args)]
struct VocabArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 5)]
    min_count: u64,
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    misspellings: PathBuf,
    /// Held-out misspelling pairs for neighborhood validity.
    #[arg(long)]
    eval_pairs: PathBuf,
    /// Optional similarity dataset.
    #[arg(long)]
    similarity: Option<PathBuf>,
    /// Optional analogy dataset.
    #[arg(long)]
    analogy: Option<PathBuf>,
    /// Comma-separated alphas; defaults to the published grid plus 0.
    #[arg(long, value_delimiter = ',')]
    alphas: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// CSV with one row per alpha.
    #[arg(long, short)]
    output: PathBuf,
    #[command(flatten)]
    hyper: Hyper,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    /// Running text with morphology and topics.
    Corpus,
    /// Two-cluster toy grammar; also writes OUTPUT.clusters.
    Grammar,
    /// Typo correction pairs over the words of --words.
    Corrections,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(value_enum)]
    kind: SynthKind,
    /// Approximate corpus size in bytes.
    #[arg(long, default_value_t = 10 << 20)]
    bytes: usize,
    /// Sentences of the toy grammar.
    #[arg(long, default_value_t = 20_000)]
    sentences: usize,
    /// Word list (one per line or `word<TAB>count`) for corrections.
    #[arg(long)]
    words: Option<PathBuf>,
    /// Number of correction pairs.
    #[arg(long, default_value_t = 1000)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    output: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if is_validation(&e) {
                eprintln!("\nFor more information, try '--help'.");
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn is_validation(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.is::<ConfigError>() || matches!(c.downcast_ref::<Error>(), Some(Error::Config(_)))
    })
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Train(a) => cmd_train(a),
        Command::Mine(a) => cmd_mine(a),
        Command::Generate(a) => cmd_generate(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Nn(a) => cmd_nn(a),
        Command::Vocab(a) => cmd_vocab(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let opts = TrainOptions {
        config: a.hyper.config(),
        checkpoint_dir: a.checkpoint_dir,
        verbose: true,
    };
    opts.config.validate()?;
    let trained = if a.ft_only {
        train_fasttext(&a.corpus, &opts)?
    } else {
        let pairs = match &a.misspellings {
            Some(p) => formats::load_misspellings(p)?,
            None => Vec::new(),
        };
        train(&a.corpus, &pairs, &opts)?
    };
    formats::save_model(&with_ext(&a.output, "bin"), &trained.model)?;
    if !a.no_vec {
        formats::save_text_vectors(&with_ext(&a.output, "vec"), &trained.model)?;
    }
    save_json(&with_ext(&a.output, "json"), &trained.report)?;
    let r = &trained.report;
    println!(
        "vocabulary {}  tokens {}  pairs used {}/{} (invalid {}, degenerate {})",
        r.vocab_size, r.total_tokens, r.pairs.used, r.pairs.given, r.pairs.invalid, r.pairs.degenerate
    );
    println!("epoch  ft-loss  sc-loss  sc-updates");
    for e in &r.epochs {
        println!(
            "{:>5}  {:>7.4}  {:>7.4}  {:>10}",
            e.epoch, e.mean_ft_loss, e.mean_sc_loss, e.sc_updates
        );
    }
    Ok(())
}

fn cmd_mine(a: MineArgs) -> Result<()> {
    let pairs = formats::load_correction_pairs(&a.pairs)?;
    let model = mine_error_model(pairs.iter().map(|(o, c)| (o.as_str(), c.as_str())))?;
    formats::save_error_model(&a.output, &model)?;
    println!("{} pairs, {} keys", pairs.len(), model.len());
    Ok(())
}

fn cmd_generate(a: GenerateArgs) -> Result<()> {
    let model = formats::load_error_model(&a.error_model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    if let Some(r) = a.r {
        if !(0.0..=1.0).contains(&r) {
            return Err(ConfigError::Invalid(format!("r = {r} is outside [0, 1]")).into());
        }
        let input = a.input.as_deref().expect("clap enforces --input");
        match a.format {
            VariantFormat::Words => {
                let pairs: Vec<MisspellingPair> = formats::load_words(input)?
                    .into_iter()
                    .map(|w| MisspellingPair {
                        misspelling: generate_variant(&w, r, &model, &mut rng, a.max_attempts),
                        expected: w,
                    })
                    .collect();
                formats::save_misspellings(&a.output, &pairs)?;
                println!("{} variants", pairs.len());
            }
            VariantFormat::Similarity => {
                let rows = formats::load_similarity(input)?;
                let out = misspell_similarity_rows(&rows, r, &model, &mut rng, a.max_attempts);
                formats::save_similarity(&a.output, &out)?;
                println!("{} rows", out.len());
            }
            VariantFormat::Analogy => {
                let mut sections = formats::load_analogies(input)?;
                for s in &mut sections {
                    s.rows = misspell_analogy_rows(&s.rows, r, &model, &mut rng, a.max_attempts);
                }
                formats::save_analogies(&a.output, &sections)?;
                println!("{} rows", sections.iter().map(|s| s.rows.len()).sum::<usize>());
            }
        }
        return Ok(());
    }
    let vocab = match (&a.corpus, &a.vocab) {
        (Some(c), _) => corpus::build_vocabulary(c, a.min_count)?,
        (None, Some(v)) => formats::load_vocab(v, a.min_count)?,
        (None, None) => {
            return Err(ConfigError::Invalid("dataset mode needs --corpus or --vocab".into()).into())
        }
    };
    let pairs = generate_dataset(&vocab, &model, &mut rng);
    formats::save_misspellings(&a.output, &pairs)?;
    let changed = pairs.iter().filter(|p| p.misspelling != p.expected).count();
    println!("{} pairs over {} words, {changed} differ from their word", pairs.len(), vocab.len());
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    if a.k == 0 {
        return Err(ConfigError::Invalid("k must be positive".into()).into());
    }
    let model = formats::load_model(&a.model)?;
    let mode = a.mode.into();
    let summary = match a.task {
        Task::Similarity => evaluate::similarity(&model, &a.data, mode)?,
        Task::Analogy => evaluate::analogy(&model, &a.data, mode)?,
        Task::Neighborhood => evaluate::neighborhood(&model, &a.data, a.k, mode)?,
    };
    print!("{}", summary.table());
    if let Some(path) = &a.report {
        save_json(path, &summary)?;
    }
    Ok(())
}

fn cmd_nn(a: NnArgs) -> Result<()> {
    let model = formats::load_model(&a.model)?;
    let index = WordIndex::new(&model, a.mode.into());
    let mut out = std::io::stdout().lock();
    for (rank, (word, score)) in knn(&model, &index, &a.token, a.k).iter().enumerate() {
        writeln!(out, "{:>3}  {score:>7.4}  {word}", rank + 1)?;
    }
    Ok(())
}

fn cmd_vocab(a: VocabArgs) -> Result<()> {
    let vocab = corpus::build_vocabulary(&a.corpus, a.min_count)?;
    formats::save_vocab(&a.output, &vocab)?;
    println!("{} words, {} tokens", vocab.len(), vocab.total_tokens());
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    let alphas = if a.alphas.is_empty() {
        ALPHA_GRID.to_vec()
    } else {
        a.alphas.clone()
    };
    let pairs = formats::load_misspellings(&a.misspellings)?;
    let base = a.hyper.config();
    base.validate()?;
    let vocab = corpus::build_vocabulary(&a.corpus, base.min_count)?;
    let mut csv = String::from("alpha,mrr,coverage");
    if a.similarity.is_some() {
        csv.push_str(",spearman");
    }
    if a.analogy.is_some() {
        csv.push_str(",semantic,syntactic");
    }
    csv.push('\n');
    for &alpha in &alphas {
        let opts = TrainOptions {
            config: TrainingConfig { alpha, ..base.clone() },
            checkpoint_dir: None,
            verbose: true,
        };
        let model = spellvec::train::train_with_vocab(&a.corpus, vocab.clone(), Some(&pairs), &opts)
            .with_context(|| format!("training with alpha = {alpha}"))?
            .model;
        let nb = evaluate::neighborhood(&model, &a.eval_pairs, a.k, Mode::InIn)?;
        let mut row = format!("{alpha},{},{}", nb.metrics["mrr"], nb.metrics["coverage"]);
        if let Some(p) = &a.similarity {
            row.push_str(&format!(",{}", evaluate::similarity(&model, p, Mode::InIn)?.metrics["spearman"]));
        }
        if let Some(p) = &a.analogy {
            let an = evaluate::analogy(&model, p, Mode::InIn)?;
            row.push_str(&format!(",{},{}", an.metrics["semantic"], an.metrics["syntactic"]));
        }
        println!("{row}");
        csv.push_str(&row);
        csv.push('\n');
    }
    formats::write_atomic(&a.output, |w| w.write_all(csv.as_bytes()))?;
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    match a.kind {
        SynthKind::Corpus => {
            let spec = synth::CorpusSpec {
                target_bytes: a.bytes,
                ..Default::default()
            };
            let text = synth::corpus(&spec, &mut rng);
            formats::write_atomic(&a.output, |w| w.write_all(text.as_bytes()))?;
        }
        SynthKind::Grammar => {
            let g = synth::toy_grammar(a.sentences, 12, &mut rng);
            formats::write_atomic(&a.output, |w| w.write_all(g.text.as_bytes()))?;
            let clusters = format!("{}\n{}\n", g.clusters[0].join(" "), g.clusters[1].join(" "));
            formats::write_atomic(&with_ext(&a.output, "clusters"), |w| {
                w.write_all(clusters.as_bytes())
            })?;
        }
        SynthKind::Corrections => {
            let Some(path) = &a.words else {
                return Err(ConfigError::Invalid("corrections need --words".into()).into());
            };
            let words: Vec<String> = formats::load_words(path)?
                .into_iter()
                .map(|l| l.split('\t').next().unwrap_or_default().to_string())
                .collect();
            if words.is_empty() {
                bail!("{}: no words", path.display());
            }
            let pairs = synth::correction_pairs(&words, a.count, &mut rng);
            formats::save_correction_pairs(&a.output, &pairs)?;
        }
    }
    Ok(())
}
