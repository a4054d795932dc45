//! Character n-grams and their mapping onto rows of the input matrix.
//!
//! Row layout of the input matrix: rows `0..|V|` are word rows, rows
//! `|V|..|V| + bucket_count` are hashed n-gram buckets.
//!
//! Hash: 32-bit FNV-1a over the UTF-8 bytes of the n-gram (offset basis
//! `0x811c9dc5`, prime `0x01000193`, xor then multiply per byte, wrapping),
//! reduced modulo `bucket_count`.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::ConfigError;
use crate::vocab::Vocabulary;

pub const BOW: char = '<';
pub const EOW: char = '>';

const FNV_OFFSET: u32 = 0x811c_9dc5;
const FNV_PRIME: u32 = 0x0100_0193;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NgramConfig {
    pub minn: usize,
    pub maxn: usize,
    pub bucket_count: u32,
    /// Wrap tokens in `<` and `>` before extraction.
    pub boundary_markers: bool,
}

impl Default for NgramConfig {
    fn default() -> Self {
        NgramConfig {
            minn: 3,
            maxn: 6,
            bucket_count: 2_000_000,
            boundary_markers: false,
        }
    }
}

impl NgramConfig {
    pub fn new(minn: usize, maxn: usize, bucket_count: u32) -> Result<Self, ConfigError> {
        let config = NgramConfig {
            minn,
            maxn,
            bucket_count,
            boundary_markers: false,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_boundary_markers(mut self, on: bool) -> Self {
        self.boundary_markers = on;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.minn == 0 || self.minn > self.maxn || self.bucket_count == 0 {
            return Err(ConfigError::Ngram {
                minn: self.minn,
                maxn: self.maxn,
                buckets: self.bucket_count,
            });
        }
        Ok(())
    }
}

/// Calls `f` for every distinct n-gram of `token`, by increasing length and
/// then left to right, at its first occurrence. An n-gram spanning the whole
/// (possibly marked) token is skipped; the word itself enters through its
/// own row.
pub fn for_each_ngram<F: FnMut(&str)>(token: &str, config: &NgramConfig, mut f: F) {
    let mut marked = String::new();
    let text = if config.boundary_markers {
        marked.reserve(token.len() + 2);
        marked.push(BOW);
        marked.push_str(token);
        marked.push(EOW);
        marked.as_str()
    } else {
        token
    };

    // byte offsets of every char boundary, including the end
    let bounds: Vec<usize> = text
        .char_indices()
        .map(|(i, _)| i)
        .chain(core::iter::once(text.len()))
        .collect();
    let len = bounds.len() - 1;
    let longest = config.maxn.min(len.saturating_sub(1));
    for n in config.minn..=longest {
        for start in 0..=(len - n) {
            let gram = &text[bounds[start]..bounds[start + n]];
            let seen = (0..start).any(|s| &text[bounds[s]..bounds[s + n]] == gram);
            if !seen {
                f(gram);
            }
        }
    }
}

pub fn extract_ngrams(token: &str, config: &NgramConfig) -> Vec<String> {
    let mut grams = Vec::new();
    for_each_ngram(token, config, |g| grams.push(String::from(g)));
    grams
}

#[inline]
pub fn fnv1a_32(bytes: &[u8]) -> u32 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= b as u32;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Bucket index of an n-gram, in `0..bucket_count`.
#[inline]
pub fn hash_ngram(gram: &str, bucket_count: u32) -> u32 {
    fnv1a_32(gram.as_bytes()) % bucket_count
}

/// Input-matrix rows that compose a token.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InputIds {
    /// The token's own word row, present iff it is in the vocabulary.
    pub word: Option<u32>,
    /// Absolute row ids of the n-gram buckets. Distinct n-grams that
    /// collide in a bucket each contribute a row.
    pub buckets: Vec<u32>,
}

impl InputIds {
    pub fn len(&self) -> usize {
        self.buckets.len() + self.word.is_some() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All rows, word row first.
    pub fn rows(&self) -> Vec<u32> {
        let mut rows = Vec::with_capacity(self.len());
        rows.extend(self.word);
        rows.extend_from_slice(&self.buckets);
        rows
    }
}

fn bucket_rows(token: &str, vocab_len: usize, config: &NgramConfig) -> Vec<u32> {
    let mut rows = Vec::new();
    for_each_ngram(token, config, |g| {
        rows.push(vocab_len as u32 + hash_ngram(g, config.bucket_count));
    });
    rows
}

/// The full composition set of a token: its n-grams plus its own row when
/// it is a vocabulary word.
pub fn word_input_ids(word: &str, vocab: &Vocabulary, config: &NgramConfig) -> InputIds {
    InputIds {
        word: vocab.id(word),
        buckets: bucket_rows(word, vocab.len(), config),
    }
}

/// The n-gram-only composition set used for misspellings; never contains a
/// word row, even when the token happens to be a vocabulary word.
pub fn misspelling_input_ids(token: &str, vocab_len: usize, config: &NgramConfig) -> InputIds {
    InputIds {
        word: None,
        buckets: bucket_rows(token, vocab_len, config),
    }
}

/// Precomputed composition rows of every vocabulary word, flattened.
#[derive(Debug, Clone)]
pub struct SubwordTable {
    offsets: Vec<usize>,
    rows: Vec<u32>,
}

impl SubwordTable {
    pub fn new(vocab: &Vocabulary, config: &NgramConfig) -> Self {
        let mut offsets = Vec::with_capacity(vocab.len() + 1);
        let mut rows = Vec::new();
        offsets.push(0);
        for (id, word) in vocab.words().iter().enumerate() {
            rows.push(id as u32);
            for_each_ngram(word, config, |g| {
                rows.push(vocab.len() as u32 + hash_ngram(g, config.bucket_count));
            });
            offsets.push(rows.len());
        }
        SubwordTable { offsets, rows }
    }

    /// Word row followed by the word's bucket rows.
    #[inline]
    pub fn rows(&self, word: u32) -> &[u32] {
        let w = word as usize;
        &self.rows[self.offsets[w]..self.offsets[w + 1]]
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn cfg(minn: usize, maxn: usize) -> NgramConfig {
        NgramConfig::new(minn, maxn, 2_000_000).unwrap()
    }

    #[test]
    fn banana_ngrams() {
        let grams = extract_ngrams("banana", &cfg(3, 5));
        assert_eq!(
            grams,
            vec!["ban", "ana", "nan", "bana", "anan", "nana", "banan", "anana"]
        );
    }

    #[test]
    fn short_token_has_no_ngrams() {
        assert!(extract_ngrams("ab", &cfg(3, 6)).is_empty());
    }

    #[test]
    fn whole_token_gram_is_excluded() {
        assert_eq!(extract_ngrams("abcd", &cfg(3, 6)), vec!["abc", "bcd"]);
        assert!(extract_ngrams("abc", &cfg(3, 6)).is_empty());
    }

    #[test]
    fn boundary_markers_wrap_the_token() {
        let c = cfg(3, 3).with_boundary_markers(true);
        assert_eq!(extract_ngrams("ab", &c), vec!["<ab", "ab>"]);
    }

    #[test]
    fn multibyte_characters_count_once() {
        assert_eq!(extract_ngrams("čaša", &cfg(3, 3)), vec!["čaš", "aša"]);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(NgramConfig::new(0, 3, 10).is_err());
        assert!(NgramConfig::new(4, 3, 10).is_err());
        assert!(NgramConfig::new(3, 6, 0).is_err());
    }

    #[test]
    fn hash_is_deterministic_and_bounded() {
        assert_eq!(hash_ngram("a", 1), 0);
        assert_eq!(hash_ngram("ban", 2_000_000), hash_ngram("ban", 2_000_000));
        assert!(hash_ngram("ban", 17) < 17);
    }

    #[test]
    fn word_ids_add_exactly_the_word_row() {
        let vocab = Vocabulary::from_tokens(["banana", "apple", "banana"], 1).unwrap();
        let c = cfg(3, 5);
        let full = word_input_ids("banana", &vocab, &c);
        let hat = misspelling_input_ids("banana", vocab.len(), &c);
        assert_eq!(full.word, Some(0));
        assert_eq!(full.buckets.len(), 8);
        assert_eq!(hat.word, None);
        assert_eq!(hat.buckets, full.buckets);
        assert_eq!(full.len(), 9);
        assert!(full.buckets.iter().all(|&r| (2..2 + 2_000_000).contains(&r)));
        assert!(misspelling_input_ids("ab", vocab.len(), &c).is_empty());
    }

    #[test]
    fn table_matches_word_input_ids() {
        let vocab = Vocabulary::from_tokens(["alpha", "beta", "beta", "gamma"], 1).unwrap();
        let c = NgramConfig::new(2, 4, 97).unwrap();
        let table = SubwordTable::new(&vocab, &c);
        for id in 0..vocab.len() as u32 {
            let ids = word_input_ids(vocab.word(id), &vocab, &c);
            assert_eq!(table.rows(id), ids.rows().as_slice());
        }
    }
}
