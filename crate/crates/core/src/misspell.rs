//! Character-level error model mined from correction pairs, and the
//! misspelling generators built on it.
//!
//! A correction pair `(original, corrected)` is aligned with a minimal-edit
//! backtrace. Every aligned position yields a triplet `(context, typed,
//! intended)` for each context length 0 through 3, where the context is the
//! characters of the original preceding the position. Deletions (a typed
//! character with no intended counterpart) use an empty target, insertions
//! (an intended character that was not typed) use an empty pivot.
//!
//! Generation walks the characters of a correct word, looks up the longest
//! context available for `(context, char)`, and replaces the character with
//! a target drawn from the key's target list. Empty-pivot keys are kept in
//! the model but never consulted when generating, so generated misspellings
//! contain substitutions and deletions only.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;

use crate::error::ConfigError;
use crate::eval::{AnalogyRow, SimilarityRow};
use crate::vocab::Vocabulary;

/// Maximum number of preceding characters used as context.
pub const MAX_CONTEXT: usize = 3;

pub const DEFAULT_MAX_ATTEMPTS: usize = 1000;

/// Levenshtein distance over Unicode scalar values with unit costs.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + (ca != cb) as usize;
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// One step of a minimal-edit alignment from `original` to `corrected`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditOp {
    /// `original[i]` aligned with `corrected[j]`; equal characters included.
    Substitute { i: usize, j: usize },
    /// `original[i]` has no counterpart.
    Delete { i: usize },
    /// `corrected[j]` has no counterpart; it sits before `original[i]`.
    Insert { i: usize, j: usize },
}

/// Minimal-edit alignment. Ties in the backtrace prefer substitution, then
/// deletion, then insertion.
pub fn align(original: &[char], corrected: &[char]) -> Vec<EditOp> {
    let (n, m) = (original.len(), corrected.len());
    let w = m + 1;
    let mut dp = vec![0usize; (n + 1) * w];
    for i in 0..=n {
        dp[i * w] = i;
    }
    for j in 0..=m {
        dp[j] = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = dp[(i - 1) * w + j - 1] + (original[i - 1] != corrected[j - 1]) as usize;
            let del = dp[(i - 1) * w + j] + 1;
            let ins = dp[i * w + j - 1] + 1;
            dp[i * w + j] = sub.min(del).min(ins);
        }
    }

    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = dp[i * w + j];
        if i > 0
            && j > 0
            && dp[(i - 1) * w + j - 1] + (original[i - 1] != corrected[j - 1]) as usize == here
        {
            ops.push(EditOp::Substitute { i: i - 1, j: j - 1 });
            i -= 1;
            j -= 1;
        } else if i > 0 && dp[(i - 1) * w + j] + 1 == here {
            ops.push(EditOp::Delete { i: i - 1 });
            i -= 1;
        } else {
            ops.push(EditOp::Insert { i, j: j - 1 });
            j -= 1;
        }
    }
    ops.reverse();
    ops
}

/// `(context, typed, intended)`; `None` stands for the empty character.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Triplet {
    pub context: String,
    pub pivot: Option<char>,
    pub target: Option<char>,
}

/// All triplets of one correction pair, in alignment order, longest
/// context first at each position.
pub fn triplets(original: &str, corrected: &str) -> Vec<Triplet> {
    let orig: Vec<char> = original.chars().collect();
    let corr: Vec<char> = corrected.chars().collect();
    let mut out = Vec::new();
    for op in align(&orig, &corr) {
        let (pos, pivot, target) = match op {
            EditOp::Substitute { i, j } => (i, Some(orig[i]), Some(corr[j])),
            EditOp::Delete { i } => (i, Some(orig[i]), None),
            EditOp::Insert { i, j } => (i, None, Some(corr[j])),
        };
        for len in (0..=MAX_CONTEXT.min(pos)).rev() {
            out.push(Triplet {
                context: orig[pos - len..pos].iter().collect(),
                pivot,
                target,
            });
        }
    }
    out
}

pub type ErrorKey = (String, Option<char>);

/// Target distribution per `(context, pivot)` key, each list sorted by
/// decreasing probability with ties broken by character code.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErrorModel {
    targets: BTreeMap<ErrorKey, Vec<(Option<char>, f64)>>,
}

/// Accumulates triplet counts over correction pairs.
#[derive(Debug, Clone, Default)]
pub struct ErrorModelBuilder {
    counts: BTreeMap<ErrorKey, BTreeMap<Option<char>, u64>>,
    pairs: u64,
}

impl ErrorModelBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_pair(&mut self, original: &str, corrected: &str) {
        self.pairs += 1;
        for t in triplets(original, corrected) {
            *self
                .counts
                .entry((t.context, t.pivot))
                .or_default()
                .entry(t.target)
                .or_insert(0) += 1;
        }
    }

    pub fn pairs(&self) -> u64 {
        self.pairs
    }

    pub fn build(self) -> Result<ErrorModel, ConfigError> {
        if self.pairs == 0 {
            return Err(ConfigError::NoCorrectionPairs);
        }
        let targets = self
            .counts
            .into_iter()
            .map(|(key, counts)| {
                let total: u64 = counts.values().sum();
                let mut list: Vec<(Option<char>, u64)> = counts.into_iter().collect();
                // BTreeMap order is ascending character code; stable sort keeps it for ties
                list.sort_by(|a, b| b.1.cmp(&a.1));
                let list = list
                    .into_iter()
                    .map(|(t, c)| (t, c as f64 / total as f64))
                    .collect();
                (key, list)
            })
            .collect();
        Ok(ErrorModel { targets })
    }
}

/// Mines an error model from `(original, corrected)` pairs.
pub fn mine_error_model<'a, I>(pairs: I) -> Result<ErrorModel, ConfigError>
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    let mut builder = ErrorModelBuilder::new();
    for (original, corrected) in pairs {
        builder.add_pair(original, corrected);
    }
    builder.build()
}

impl ErrorModel {
    /// Builds a model from `(context, pivot, target, probability)` rows
    /// grouped by key, validating ordering and normalization.
    pub fn from_entries<I>(entries: I) -> Result<Self, ConfigError>
    where
        I: IntoIterator<Item = (String, Option<char>, Option<char>, f64)>,
    {
        let mut targets: BTreeMap<ErrorKey, Vec<(Option<char>, f64)>> = BTreeMap::new();
        let mut last_key: Option<ErrorKey> = None;
        for (context, pivot, target, p) in entries {
            if context.chars().count() > MAX_CONTEXT {
                return Err(invalid("context longer than 3 characters"));
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid("probability outside [0, 1]"));
            }
            let key = (context, pivot);
            if last_key.as_ref() != Some(&key) && targets.contains_key(&key) {
                return Err(invalid("target list for a key is not contiguous"));
            }
            targets.entry(key.clone()).or_default().push((target, p));
            last_key = Some(key);
        }
        for list in targets.values() {
            let sum: f64 = list.iter().map(|t| t.1).sum();
            if Float::abs(sum - 1.0) > 1e-9 {
                return Err(invalid("target probabilities do not sum to 1"));
            }
            for w in list.windows(2) {
                let ordered = w[0].1 > w[1].1 || (w[0].1 == w[1].1 && w[0].0 < w[1].0);
                if !ordered {
                    return Err(invalid("target list is not sorted by decreasing probability"));
                }
            }
        }
        Ok(ErrorModel { targets })
    }

    /// Rows in file order: keys ascending, targets by decreasing probability.
    pub fn entries(&self) -> impl Iterator<Item = (&str, Option<char>, Option<char>, f64)> {
        self.targets.iter().flat_map(|((c, p), list)| {
            list.iter().map(move |&(t, prob)| (c.as_str(), *p, t, prob))
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn targets(&self, context: &str, pivot: Option<char>) -> Option<&[(Option<char>, f64)]> {
        self.targets
            .get(&(String::from(context), pivot))
            .map(Vec::as_slice)
    }

    pub fn keys(&self) -> impl Iterator<Item = &ErrorKey> {
        self.targets.keys()
    }

    /// Target list for `ch` under the longest available context among the
    /// up to three characters in `preceding`.
    fn lookup(&self, preceding: &[char], ch: char) -> Option<&[(Option<char>, f64)]> {
        let longest = MAX_CONTEXT.min(preceding.len());
        (0..=longest).rev().find_map(|len| {
            let context: String = preceding[preceding.len() - len..].iter().collect();
            self.targets.get(&(context, Some(ch))).map(Vec::as_slice)
        })
    }
}

fn invalid(msg: &str) -> ConfigError {
    ConfigError::Invalid(String::from(msg))
}

/// Walks a target list accumulating probabilities until the running sum
/// reaches `tp`. The last entry absorbs any residual mass. `None` is the
/// empty target, i.e. the character is dropped.
pub fn walk_targets(list: &[(Option<char>, f64)], tp: f64) -> Option<char> {
    let mut acc = 0.0;
    for &(t, p) in list {
        acc += p;
        if acc >= tp {
            return t;
        }
    }
    list.last().and_then(|&(t, _)| t)
}

/// Replaces every character of `word` by a target drawn from the error
/// model, using a fresh uniform draw per character. Characters without a
/// matching key are kept.
pub fn perturb_word<R: Rng + ?Sized>(word: &str, model: &ErrorModel, rng: &mut R) -> String {
    let chars: Vec<char> = word.chars().collect();
    let mut out = String::with_capacity(word.len());
    for (i, &ch) in chars.iter().enumerate() {
        match model.lookup(&chars[..i], ch) {
            Some(list) => {
                let tp = rng.random::<f64>();
                if let Some(t) = walk_targets(list, tp) {
                    out.push(t);
                }
            }
            None => out.push(ch),
        }
    }
    out
}

/// A misspelling and the vocabulary word it stands for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MisspellingPair {
    pub misspelling: String,
    pub expected: String,
}

/// `floor(sqrt(count))` perturbed copies of every vocabulary word, in id
/// order. Copies identical to the word are kept. A perturbation that
/// deletes every character is redrawn, up to `DEFAULT_MAX_ATTEMPTS` times
/// before the word itself is used.
pub fn generate_dataset<R: Rng + ?Sized>(
    vocab: &Vocabulary,
    model: &ErrorModel,
    rng: &mut R,
) -> Vec<MisspellingPair> {
    let mut pairs = Vec::new();
    for (word, count) in vocab.iter() {
        for _ in 0..count.isqrt() {
            let misspelling = (0..DEFAULT_MAX_ATTEMPTS)
                .map(|_| perturb_word(word, model, rng))
                .find(|m| !m.is_empty())
                .unwrap_or_else(|| String::from(word));
            pairs.push(MisspellingPair {
                misspelling,
                expected: String::from(word),
            });
        }
    }
    pairs
}

/// Edit distance a variant of `word` must have for ratio `r`.
pub fn target_distance(word: &str, r: f64) -> usize {
    Float::floor(r * word.chars().count() as f64) as usize
}

/// A misspelling at edit distance exactly `floor(r * len(word))`, found by
/// rejection sampling. Returns `word` unchanged when the target distance
/// is zero or no sample hits it within `max_attempts`.
pub fn generate_variant<R: Rng + ?Sized>(
    word: &str,
    r: f64,
    model: &ErrorModel,
    rng: &mut R,
    max_attempts: usize,
) -> String {
    let target = target_distance(word, r);
    if target == 0 {
        return String::from(word);
    }
    for _ in 0..max_attempts {
        let candidate = perturb_word(word, model, rng);
        if edit_distance(word, &candidate) == target {
            return candidate;
        }
    }
    String::from(word)
}

/// Misspells both words of every similarity row.
pub fn misspell_similarity_rows<R: Rng + ?Sized>(
    rows: &[SimilarityRow],
    r: f64,
    model: &ErrorModel,
    rng: &mut R,
    max_attempts: usize,
) -> Vec<SimilarityRow> {
    rows.iter()
        .map(|row| SimilarityRow {
            a: generate_variant(&row.a, r, model, rng, max_attempts),
            b: generate_variant(&row.b, r, model, rng, max_attempts),
            score: row.score,
        })
        .collect()
}

/// Misspells the first pair `(A, B)` of every analogy row.
pub fn misspell_analogy_rows<R: Rng + ?Sized>(
    rows: &[AnalogyRow],
    r: f64,
    model: &ErrorModel,
    rng: &mut R,
    max_attempts: usize,
) -> Vec<AnalogyRow> {
    rows.iter()
        .map(|row| AnalogyRow {
            a: generate_variant(&row.a, r, model, rng, max_attempts),
            b: generate_variant(&row.b, r, model, rng, max_attempts),
            ..row.clone()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(seed)
    }

    fn single(pivot: char, list: &[(char, f64)]) -> ErrorModel {
        ErrorModel::from_entries(
            list.iter()
                .map(|&(t, p)| (String::new(), Some(pivot), Some(t), p)),
        )
        .unwrap()
    }

    #[test]
    fn edit_distance_examples() {
        assert_eq!(edit_distance("hello", "hello"), 0);
        assert_eq!(edit_distance("worjd", "world"), 1);
        assert_eq!(edit_distance("", "abc"), 3);
        assert_eq!(edit_distance("kitten", "sitting"), 3);
        assert_eq!(edit_distance("čaj", "caj"), 1);
    }

    #[test]
    fn worked_example_yields_four_triplets() {
        let ts = triplets("hello worjd", "hello world");
        let at_j: Vec<_> = ts.iter().filter(|t| t.pivot == Some('j')).collect();
        let expect = [("wor", 'j', 'l'), ("or", 'j', 'l'), ("r", 'j', 'l'), ("", 'j', 'l')];
        assert_eq!(at_j.len(), 4);
        for (t, (c, p, e)) in at_j.iter().zip(expect) {
            assert_eq!((t.context.as_str(), t.pivot, t.target), (c, Some(p), Some(e)));
        }
    }

    #[test]
    fn identity_pair_gives_certain_target() {
        let m = mine_error_model([("a", "a")]).unwrap();
        assert_eq!(m.targets("", Some('a')), Some(&[(Some('a'), 1.0)][..]));
    }

    #[test]
    fn two_pairs_split_probability() {
        let m = mine_error_model([("ab", "ab"), ("ab", "ac")]).unwrap();
        assert_eq!(
            m.targets("a", Some('b')),
            Some(&[(Some('b'), 0.5), (Some('c'), 0.5)][..])
        );
    }

    #[test]
    fn insertions_and_deletions_use_empty_characters() {
        let ops = align(&['a', 'x', 'b'], &['a', 'b']);
        assert_eq!(
            ops,
            vec![
                EditOp::Substitute { i: 0, j: 0 },
                EditOp::Delete { i: 1 },
                EditOp::Substitute { i: 2, j: 1 }
            ]
        );
        let ts = triplets("ab", "acb");
        assert!(ts.contains(&Triplet {
            context: "a".into(),
            pivot: None,
            target: Some('c')
        }));
        let ts = triplets("axb", "ab");
        assert!(ts.contains(&Triplet {
            context: "a".into(),
            pivot: Some('x'),
            target: None
        }));
    }

    #[test]
    fn empty_pair_stream_is_an_error() {
        let none: [(&str, &str); 0] = [];
        assert_eq!(mine_error_model(none).unwrap_err(), ConfigError::NoCorrectionPairs);
    }

    #[test]
    fn identity_model_keeps_words() {
        let m = mine_error_model([("banana split", "banana split")]).unwrap();
        let mut r = rng(0);
        for _ in 0..20 {
            assert_eq!(perturb_word("banana", &m, &mut r), "banana");
        }
    }

    #[test]
    fn certain_substitution_replaces_every_char() {
        let m = single('a', &[('b', 1.0)]);
        assert_eq!(perturb_word("aaa", &m, &mut rng(1)), "bbb");
        assert_eq!(perturb_word("xax", &m, &mut rng(1)), "xbx");
    }

    #[test]
    fn substitution_rate_matches_target_probability() {
        let m = single('a', &[('a', 0.9), ('b', 0.1)]);
        let mut r = rng(17);
        let n = 100_000;
        let hits = (0..n).filter(|_| perturb_word("a", &m, &mut r) == "b").count();
        let f = hits as f64 / n as f64;
        assert!((f - 0.10).abs() < 0.005, "frequency {f}");
    }

    #[test]
    fn empty_target_deletes() {
        let m = ErrorModel::from_entries([(String::new(), Some('x'), None, 1.0)]).unwrap();
        assert_eq!(perturb_word("axbx", &m, &mut rng(2)), "ab");
    }

    #[test]
    fn longest_context_wins() {
        let m = ErrorModel::from_entries([
            (String::new(), Some('c'), Some('c'), 1.0),
            ("ab".into(), Some('c'), Some('z'), 1.0),
        ])
        .unwrap();
        assert_eq!(perturb_word("abc", &m, &mut rng(3)), "abz");
        assert_eq!(perturb_word("bbc", &m, &mut rng(3)), "bbc");
    }

    #[test]
    fn dataset_size_is_floor_sqrt_count() {
        let mut tokens = vec!["w"; 100];
        tokens.extend(["one"]);
        tokens.extend(vec!["ten"; 10]);
        let vocab = Vocabulary::from_tokens(tokens, 1).unwrap();
        let m = single('w', &[('v', 1.0)]);
        let pairs = generate_dataset(&vocab, &m, &mut rng(4));
        let count = |w: &str| pairs.iter().filter(|p| p.expected == w).count();
        assert_eq!(count("w"), 10);
        assert_eq!(count("ten"), 3);
        assert_eq!(count("one"), 1);
        assert!(pairs.iter().filter(|p| p.expected == "w").all(|p| p.misspelling == "v"));
    }

    #[test]
    fn variant_with_zero_target_is_unchanged() {
        let m = single('a', &[('b', 1.0)]);
        assert_eq!(generate_variant("abcdefg", 0.125, &m, &mut rng(5), 1000), "abcdefg");
    }

    #[test]
    fn variant_hits_exact_distance() {
        let m = mine_error_model([
            ("bamana", "banana"),
            ("banama", "banana"),
            ("banana", "banana"),
            ("bsnana", "banana"),
        ])
        .unwrap();
        let mut r = rng(6);
        for _ in 0..200 {
            let v = generate_variant("banana", 0.25, &m, &mut r, 1000);
            assert!(v == "banana" || edit_distance("banana", &v) == 1, "{v}");
        }
    }

    #[test]
    fn rejects_malformed_entries() {
        assert!(ErrorModel::from_entries([(String::new(), Some('a'), Some('a'), 0.7)]).is_err());
        assert!(ErrorModel::from_entries([
            (String::new(), Some('a'), Some('b'), 0.3),
            (String::new(), Some('a'), Some('a'), 0.7),
        ])
        .is_err());
        assert!(ErrorModel::from_entries([("abcd".into(), Some('a'), Some('a'), 1.0)]).is_err());
    }
}
