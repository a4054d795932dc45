use std::collections::BTreeMap;

use spellvec_core::subword::{
    extract_ngrams, fnv1a_32, hash_ngram, misspelling_input_ids, word_input_ids,
};
use spellvec_core::{NgramConfig, Vocabulary};

/// Distinct substrings of length minn..=maxn, excluding the whole token,
/// ordered by length then first position.
fn brute_ngrams(token: &str, minn: usize, maxn: usize) -> Vec<String> {
    let chars: Vec<char> = token.chars().collect();
    let mut out: Vec<String> = Vec::new();
    for n in minn..=maxn {
        for s in 0..chars.len() {
            if s + n > chars.len() || n == chars.len() {
                continue;
            }
            let g: String = chars[s..s + n].iter().collect();
            if !out.contains(&g) {
                out.push(g);
            }
        }
    }
    out
}

fn all_tokens(alphabet: &[char], max_len: usize) -> Vec<String> {
    let mut all = vec![String::new()];
    let mut frontier = vec![String::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for t in &frontier {
            for &c in alphabet {
                let mut s = t.clone();
                s.push(c);
                next.push(s);
            }
        }
        all.extend(next.iter().cloned());
        frontier = next;
    }
    all
}

#[test]
fn extraction_matches_brute_force_up_to_length_ten() {
    let configs = [(3, 6), (1, 2), (2, 10), (3, 5)];
    for token in all_tokens(&['a', 'b', 'c'], 10) {
        for &(minn, maxn) in &configs {
            let cfg = NgramConfig::new(minn, maxn, 1000).unwrap();
            assert_eq!(extract_ngrams(&token, &cfg), brute_ngrams(&token, minn, maxn), "{token}");
            let marked = cfg.with_boundary_markers(true);
            assert_eq!(
                extract_ngrams(&token, &marked),
                brute_ngrams(&format!("<{token}>"), minn, maxn),
                "<{token}>"
            );
        }
    }
}

#[test]
fn fnv_reference_vectors() {
    assert_eq!(fnv1a_32(b""), 0x811c9dc5);
    assert_eq!(fnv1a_32(b"a"), 0xe40c292c);
    assert_eq!(fnv1a_32(b"foobar"), 0xbf9cf968);
    assert_eq!(hash_ngram("foobar", 1000), 0xbf9cf968 % 1000);
}

#[test]
fn word_ids_are_misspelling_ids_plus_word_row() {
    let vocab = Vocabulary::from_tokens(["kitten", "sitting", "kitten", "mitten"], 1).unwrap();
    let cfg = NgramConfig::new(2, 5, 31).unwrap();
    for w in ["kitten", "sitting", "mitten", "smitten", "ki"] {
        let full = word_input_ids(w, &vocab, &cfg);
        let hat = misspelling_input_ids(w, vocab.len(), &cfg);
        let mut multiset: BTreeMap<u32, usize> = BTreeMap::new();
        for r in full.rows() {
            *multiset.entry(r).or_default() += 1;
        }
        for r in hat.rows() {
            *multiset.get_mut(&r).unwrap() -= 1;
        }
        multiset.retain(|_, c| *c > 0);
        let rest: Vec<u32> = multiset.into_keys().collect();
        match vocab.id(w) {
            Some(id) => assert_eq!(rest, vec![id]),
            None => assert!(rest.is_empty()),
        }
    }
}
