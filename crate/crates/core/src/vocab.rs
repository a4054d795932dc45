//! Corpus vocabulary and frequent-word subsampling.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use hashbrown::HashMap;
use num_traits::Float;
use rand::Rng;

use crate::error::ConfigError;

/// Default subsampling threshold on relative word frequency.
pub const DEFAULT_SUBSAMPLE: f64 = 1e-4;

/// Splits text into tokens on ASCII whitespace. No normalization is applied.
pub fn tokenize(text: &str) -> impl Iterator<Item = &str> {
    text.split_ascii_whitespace()
}

/// Words that survived the frequency threshold, with dense ids.
///
/// Ids are assigned by descending count, ties broken by byte-wise
/// lexicographic order, so rebuilding from the same corpus yields the
/// same mapping.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, u32>,
    total_tokens: u64,
    min_count: u64,
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.words == other.words
            && self.counts == other.counts
            && self.total_tokens == other.total_tokens
            && self.min_count == other.min_count
    }
}

impl Vocabulary {
    /// Counts every token of the iterator and applies `min_count`.
    pub fn from_tokens<'a, I>(tokens: I, min_count: u64) -> Result<Self, ConfigError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut builder = VocabBuilder::new();
        for token in tokens {
            builder.add(token);
        }
        builder.build(min_count)
    }

    /// Builds a vocabulary from precomputed `(word, count)` entries.
    ///
    /// Entries below `min_count` are dropped; duplicate words are summed.
    pub fn from_counts<I>(entries: I, min_count: u64) -> Result<Self, ConfigError>
    where
        I: IntoIterator<Item = (String, u64)>,
    {
        if min_count == 0 {
            return Err(ConfigError::ZeroMinCount);
        }
        let mut merged: HashMap<String, u64> = HashMap::new();
        for (word, count) in entries {
            *merged.entry(word).or_insert(0) += count;
        }
        let mut kept: Vec<(String, u64)> =
            merged.into_iter().filter(|(_, c)| *c >= min_count).collect();
        if kept.is_empty() {
            return Err(ConfigError::EmptyVocabulary(min_count));
        }
        kept.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

        let mut words = Vec::with_capacity(kept.len());
        let mut counts = Vec::with_capacity(kept.len());
        for (w, c) in kept {
            words.push(w);
            counts.push(c);
        }
        Ok(Self::assemble(words, counts, min_count))
    }

    /// Reassembles a vocabulary whose ids are already fixed, e.g. from a
    /// model file. The word order is taken as-is.
    pub fn from_ordered(
        words: Vec<String>,
        counts: Vec<u64>,
        min_count: u64,
    ) -> Result<Self, ConfigError> {
        if min_count == 0 {
            return Err(ConfigError::ZeroMinCount);
        }
        if words.is_empty() {
            return Err(ConfigError::EmptyVocabulary(min_count));
        }
        if words.len() != counts.len() {
            return Err(ConfigError::Invalid("word and count lists differ in length".to_string()));
        }
        if let Some(c) = counts.iter().find(|&&c| c < min_count) {
            return Err(ConfigError::Invalid(alloc::format!(
                "count {c} is below min_count {min_count}"
            )));
        }
        let vocab = Self::assemble(words, counts, min_count);
        if vocab.index.len() != vocab.words.len() {
            return Err(ConfigError::Invalid("duplicate word in vocabulary".to_string()));
        }
        Ok(vocab)
    }

    fn assemble(words: Vec<String>, counts: Vec<u64>, min_count: u64) -> Self {
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        let total_tokens = counts.iter().sum();
        Vocabulary {
            words,
            counts,
            index,
            total_tokens,
            min_count,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.words.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    #[inline]
    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    #[inline]
    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    #[inline]
    pub fn count(&self, id: u32) -> u64 {
        self.counts[id as usize]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Number of corpus tokens whose word is in the vocabulary.
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    /// `(word, count)` in id order, which is descending count.
    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.words.iter().map(String::as_str).zip(self.counts.iter().copied())
    }
}

/// Incremental token counter for streaming corpora.
#[derive(Debug, Default)]
pub struct VocabBuilder {
    counts: HashMap<String, u64>,
    raw_tokens: u64,
}

impl VocabBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, token: &str) {
        self.raw_tokens += 1;
        *self.counts.entry_ref(token).or_insert(0) += 1;
    }

    pub fn add_text(&mut self, text: &str) {
        for token in tokenize(text) {
            self.add(token);
        }
    }

    /// Every token seen, including those that will fall below the threshold.
    pub fn raw_tokens(&self) -> u64 {
        self.raw_tokens
    }

    pub fn build(self, min_count: u64) -> Result<Vocabulary, ConfigError> {
        Vocabulary::from_counts(self.counts, min_count)
    }
}

/// Probability of dropping one occurrence of a word at iteration time,
/// `max(0, 1 - sqrt(t / f))` with `f = word_freq / total`.
pub fn discard_probability(word_freq: u64, total: u64, threshold: f64) -> f64 {
    let f = word_freq as f64 / total as f64;
    let p = 1.0 - Float::sqrt(threshold / f);
    p.clamp(0.0, 1.0)
}

/// Per-word discard probabilities for a fixed threshold.
#[derive(Debug, Clone)]
pub struct SubsamplingPolicy {
    threshold: f64,
    discard: Vec<f64>,
}

impl SubsamplingPolicy {
    pub fn new(vocab: &Vocabulary, threshold: f64) -> Self {
        let total = vocab.total_tokens();
        let discard = vocab
            .counts()
            .iter()
            .map(|&c| discard_probability(c, total, threshold))
            .collect();
        SubsamplingPolicy { threshold, discard }
    }

    /// A policy that never drops a token.
    pub fn keep_all(vocab: &Vocabulary) -> Self {
        Self::new(vocab, f64::INFINITY)
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    #[inline]
    pub fn discard_probability(&self, id: u32) -> f64 {
        self.discard[id as usize]
    }

    /// Draws from `rng` only for words with a nonzero discard probability.
    #[inline]
    pub fn keep<R: Rng + ?Sized>(&self, id: u32, rng: &mut R) -> bool {
        let p = self.discard[id as usize];
        p <= 0.0 || rng.random::<f64>() >= p
    }
}

/// Ids of the tokens of `text` that are in the vocabulary and survive
/// subsampling, in corpus order.
pub fn iterate_tokens<'a, R: Rng + ?Sized>(
    text: &'a str,
    vocab: &'a Vocabulary,
    policy: &'a SubsamplingPolicy,
    rng: &'a mut R,
) -> impl Iterator<Item = u32> + 'a {
    tokenize(text)
        .filter_map(move |t| vocab.id(t))
        .filter(move |&id| policy.keep(id, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::SeedableRng;

    fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn threshold_removes_rare_words() {
        let v = Vocabulary::from_tokens(tokenize("a a a b"), 2).unwrap();
        assert_eq!(v.words(), &["a".to_string()]);
        assert_eq!(v.counts(), &[3]);
        assert_eq!(v.total_tokens(), 3);
    }

    #[test]
    fn min_count_one_keeps_everything() {
        let v = Vocabulary::from_tokens(tokenize("x y x y"), 1).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v.total_tokens(), 4);
        // equal counts fall back to lexicographic order
        assert_eq!(v.id("x"), Some(0));
        assert_eq!(v.id("y"), Some(1));
    }

    #[test]
    fn ids_follow_descending_count() {
        let v = Vocabulary::from_tokens(tokenize("c b b a a a"), 1).unwrap();
        assert_eq!(v.words(), &["a", "b", "c"]);
    }

    #[test]
    fn empty_after_threshold_is_an_error() {
        let err = Vocabulary::from_tokens(tokenize("a b c"), 5).unwrap_err();
        assert_eq!(err, ConfigError::EmptyVocabulary(5));
        assert_eq!(
            Vocabulary::from_tokens(tokenize("a"), 0).unwrap_err(),
            ConfigError::ZeroMinCount
        );
    }

    #[test]
    fn splits_on_ascii_whitespace_only() {
        let toks: Vec<&str> = tokenize(" a\tb\nc  d\u{a0}e ").collect();
        assert_eq!(toks, vec!["a", "b", "c", "d\u{a0}e"]);
    }

    #[test]
    fn discard_probability_examples() {
        let t = 1e-4;
        let total = 1_000_000;
        assert_eq!(discard_probability(100, total, t), 0.0);
        assert!((discard_probability(400, total, t) - 0.5).abs() < 1e-12);
        assert_eq!(discard_probability(50, total, t), 0.0);
    }

    #[test]
    fn infinite_threshold_drops_nothing() {
        let text = "a a a a a a b b c";
        let v = Vocabulary::from_tokens(tokenize(text), 1).unwrap();
        let policy = SubsamplingPolicy::new(&v, f64::INFINITY);
        let mut r = rng(3);
        let ids: Vec<u32> = iterate_tokens(text, &v, &policy, &mut r).collect();
        assert_eq!(ids.len(), 9);
    }

    #[test]
    fn out_of_vocabulary_tokens_are_skipped() {
        let v = Vocabulary::from_tokens(tokenize("a a b"), 2).unwrap();
        let policy = SubsamplingPolicy::keep_all(&v);
        let mut r = rng(0);
        let ids: Vec<u32> = iterate_tokens("a b a z", &v, &policy, &mut r).collect();
        assert_eq!(ids, vec![0, 0]);
    }

    #[test]
    fn subsampling_is_seed_reproducible() {
        let text = "the the the the the of of cat the dog the";
        let v = Vocabulary::from_tokens(tokenize(text), 1).unwrap();
        let policy = SubsamplingPolicy::new(&v, 0.05);
        let a: Vec<u32> = iterate_tokens(text, &v, &policy, &mut rng(9)).collect();
        let b: Vec<u32> = iterate_tokens(text, &v, &policy, &mut rng(9)).collect();
        assert_eq!(a, b);
        assert!(a.len() < 11);
    }
}
