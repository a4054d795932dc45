use alloc::string::String;

use thiserror::Error;

/// Invalid configuration or inputs that make a computation meaningless.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("vocabulary is empty after applying min_count = {0}")]
    EmptyVocabulary(u64),
    #[error("min_count must be positive")]
    ZeroMinCount,
    #[error("invalid n-gram configuration: minn = {minn}, maxn = {maxn}, buckets = {buckets}")]
    Ngram { minn: usize, maxn: usize, buckets: u32 },
    #[error("alpha must lie in [0, 1], got {0}")]
    Alpha(f64),
    #[error("alpha > 0 requires a nonempty misspelling set")]
    NoMisspellings,
    #[error("corpus contains no in-vocabulary tokens")]
    EmptyCorpus,
    #[error("no correction pairs to mine")]
    NoCorrectionPairs,
    #[error("{0}")]
    Invalid(String),
}
