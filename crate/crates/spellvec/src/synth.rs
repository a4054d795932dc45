//! Deterministic synthetic data: a running-text corpus with morphology and
//! topical structure, a two-cluster toy grammar, and typo correction pairs.

use std::collections::HashSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::IndexedRandom;
use rand::Rng;

const ONSETS: &[&str] = &[
    "b", "c", "d", "f", "g", "h", "j", "k", "l", "m", "n", "p", "r", "s", "t", "v", "w", "z", "br",
    "cr", "dr", "gr", "pl", "st", "tr", "ch", "sh", "th",
];
const NUCLEI: &[&str] = &["a", "e", "i", "o", "u", "ai", "ea", "ou"];
const CODAS: &[&str] = &["", "", "", "n", "r", "s", "l", "t", "m"];
const SUFFIXES: &[&str] = &["s", "ed", "ing", "er", "ers", "ly", "ness", "ment", "able"];
const FUNCTION_WORDS: &[&str] = &[
    "the", "of", "and", "to", "in", "a", "is", "that", "for", "it", "as", "was", "with", "be",
    "by", "on", "not", "he", "this", "are", "or", "his", "from", "at", "which", "but", "have",
    "an", "had", "they", "you", "were", "their", "one", "all", "we", "can", "her", "has", "there",
];

/// `count` distinct pronounceable stems of two or three syllables.
pub fn stems<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Vec<String> {
    let reserved: HashSet<&str> = FUNCTION_WORDS.iter().copied().collect();
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let syllables = rng.random_range(2..=3);
        let mut s = String::new();
        for _ in 0..syllables {
            s.push_str(ONSETS.choose(rng).unwrap());
            s.push_str(NUCLEI.choose(rng).unwrap());
            s.push_str(CODAS.choose(rng).unwrap());
        }
        if !reserved.contains(s.as_str()) && seen.insert(s.clone()) {
            out.push(s);
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct CorpusSpec {
    /// Stop after the first line that reaches this size.
    pub target_bytes: usize,
    pub stems: usize,
    pub topics: usize,
    /// Probability that a token is a function word.
    pub function_rate: f64,
    /// Probability that a content word comes from the sentence topic.
    pub topic_rate: f64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            target_bytes: 10 << 20,
            stems: 6000,
            topics: 40,
            function_rate: 0.35,
            topic_rate: 0.8,
        }
    }
}

fn zipf(n: usize, offset: f64) -> WeightedIndex<f64> {
    WeightedIndex::new((0..n).map(|r| 1.0 / (r as f64 + offset))).expect("nonempty weights")
}

/// One sentence per line. Each stem belongs to a topic and admits a few
/// suffixes; stem and function-word frequencies are Zipfian.
pub fn corpus<R: Rng + ?Sized>(spec: &CorpusSpec, rng: &mut R) -> String {
    let stems = stems(spec.stems, rng);
    let suffixes: Vec<Vec<&str>> = stems
        .iter()
        .map(|_| {
            let mut s: Vec<&str> = SUFFIXES.choose_multiple(rng, 3).copied().collect();
            s.push("");
            s.push("");
            s
        })
        .collect();
    let topics = spec.topics.max(1);
    let by_topic: Vec<Vec<usize>> = (0..topics)
        .map(|t| (t..stems.len()).step_by(topics).collect())
        .collect();
    let global = zipf(stems.len(), 2.0);
    let topic_dists: Vec<WeightedIndex<f64>> = by_topic.iter().map(|s| zipf(s.len(), 1.0)).collect();
    let function = zipf(FUNCTION_WORDS.len(), 1.0);

    let mut text = String::with_capacity(spec.target_bytes + 256);
    while text.len() < spec.target_bytes {
        let topic = rng.random_range(0..topics);
        let len = rng.random_range(8..=20);
        for i in 0..len {
            if i > 0 {
                text.push(' ');
            }
            if rng.random_bool(spec.function_rate) {
                text.push_str(FUNCTION_WORDS[function.sample(rng)]);
                continue;
            }
            let stem = if rng.random_bool(spec.topic_rate) {
                by_topic[topic][topic_dists[topic].sample(rng)]
            } else {
                global.sample(rng)
            };
            text.push_str(&stems[stem]);
            text.push_str(suffixes[stem].choose(rng).unwrap());
        }
        text.push('\n');
    }
    text
}

/// Two disjoint word families that never share a sentence.
#[derive(Debug, Clone)]
pub struct ToyGrammar {
    pub text: String,
    /// Nouns of each cluster.
    pub clusters: [Vec<String>; 2],
}

/// Sentences `det noun verb det noun` and `det adj noun verb`, where all
/// content words of a sentence come from one cluster.
pub fn toy_grammar<R: Rng + ?Sized>(sentences: usize, nouns_per_cluster: usize, rng: &mut R) -> ToyGrammar {
    let words = stems(2 * (nouns_per_cluster + 6), rng);
    let mut it = words.into_iter();
    let mut take = |n: usize| -> Vec<String> { it.by_ref().take(n).collect() };
    let nouns = [take(nouns_per_cluster), take(nouns_per_cluster)];
    let verbs = [take(3), take(3)];
    let adjs = [take(3), take(3)];
    let dets = ["the", "a", "this"];
    let mut text = String::new();
    for _ in 0..sentences {
        let c = rng.random_range(0..2);
        let n = |rng: &mut R| nouns[c].choose(rng).unwrap().as_str();
        let line = if rng.random_bool(0.5) {
            format!(
                "{} {} {} {} {}",
                dets.choose(rng).unwrap(),
                n(rng),
                verbs[c].choose(rng).unwrap(),
                dets.choose(rng).unwrap(),
                n(rng)
            )
        } else {
            format!(
                "{} {} {} {}",
                dets.choose(rng).unwrap(),
                adjs[c].choose(rng).unwrap(),
                n(rng),
                verbs[c].choose(rng).unwrap()
            )
        };
        text.push_str(&line);
        text.push('\n');
    }
    ToyGrammar { text, clusters: nouns }
}

const KEYBOARD: [&str; 3] = ["qwertyuiop", "asdfghjkl", "zxcvbnm"];

/// Letters adjacent to `c` on a QWERTY layout, same row or diagonal.
pub fn keyboard_neighbors(c: char) -> Vec<char> {
    let rows: Vec<Vec<char>> = KEYBOARD.iter().map(|r| r.chars().collect()).collect();
    let Some((ri, ci)) = rows
        .iter()
        .enumerate()
        .find_map(|(ri, r)| r.iter().position(|&x| x == c).map(|ci| (ri, ci)))
    else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for dr in -1i32..=1 {
        let r = ri as i32 + dr;
        if !(0..3).contains(&r) {
            continue;
        }
        let row = &rows[r as usize];
        for dc in -1i32..=1 {
            let col = ci as i32 + dc;
            if (dr, dc) == (0, 0) || !(0..row.len() as i32).contains(&col) {
                continue;
            }
            out.push(row[col as usize]);
        }
    }
    out
}

/// Applies one random typo: adjacent-key substitution, deletion, doubled
/// letter or transposition.
pub fn typo<R: Rng + ?Sized>(word: &str, rng: &mut R) -> String {
    let mut chars: Vec<char> = word.chars().collect();
    if chars.is_empty() {
        return String::new();
    }
    let i = rng.random_range(0..chars.len());
    match rng.random_range(0..20) {
        0..=9 => {
            if let Some(&n) = keyboard_neighbors(chars[i]).choose(rng) {
                chars[i] = n;
            }
        }
        10..=13 if chars.len() > 1 => {
            chars.remove(i);
        }
        10..=16 => chars.insert(i, chars[i]),
        _ if i + 1 < chars.len() => chars.swap(i, i + 1),
        _ => chars.insert(i, chars[i]),
    }
    chars.into_iter().collect()
}

/// `(typed, intended)` pairs over words drawn uniformly from `words`;
/// a fifth of them carry two typos.
pub fn correction_pairs<R: Rng + ?Sized>(
    words: &[String],
    count: usize,
    rng: &mut R,
) -> Vec<(String, String)> {
    (0..count)
        .map(|_| {
            let w = words.choose(rng).expect("nonempty word list");
            let mut t = typo(w, rng);
            if rng.random_bool(0.2) {
                t = typo(&t, rng);
            }
            (t, w.clone())
        })
        .collect()
}
