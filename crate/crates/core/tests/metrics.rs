use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spellvec_core::eval::{knn, neighborhood_validity, spearman, Mode, WordIndex};
use spellvec_core::misspell::MisspellingPair;
use spellvec_core::{EmbeddingModel, Matrix, NgramConfig, Vocabulary};

/// rho = 1 - 6 sum d^2 / (n (n^2 - 1)), valid without ties.
fn closed_form(x: &[f64], y: &[f64]) -> f64 {
    let rank = |v: &[f64]| -> Vec<f64> {
        let mut r = vec![0.0; v.len()];
        for i in 0..v.len() {
            r[i] = 1.0 + v.iter().filter(|&&o| o < v[i]).count() as f64;
        }
        r
    };
    let (rx, ry) = (rank(x), rank(y));
    let n = x.len() as f64;
    let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b) * (a - b)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

#[test]
fn spearman_matches_closed_form_without_ties() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let n = rng.random_range(2..40);
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        assert!((spearman(&x, &y) - closed_form(&x, &y)).abs() <= 1e-12);
    }
}

fn random_model(rng: &mut ChaCha8Rng, words: usize, dim: usize) -> EmbeddingModel<f64> {
    let vocab = Vocabulary::from_ordered(
        (0..words).map(|i| format!("w{i:02}")).collect(),
        vec![1; words],
        1,
    )
    .unwrap();
    let ngram = NgramConfig::new(2, 3, 13).unwrap();
    let rows = words + 13;
    let mut fill = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-1.0..1.0)).collect() };
    let input = Matrix::from_vec(rows, dim, fill(rows * dim)).unwrap();
    let output = Matrix::from_vec(words, dim, fill(words * dim)).unwrap();
    EmbeddingModel::from_parts(vocab, ngram, true, input, output).unwrap()
}

/// Ranks every vocabulary word by cosine to the composed query in f64,
/// ties by id, and reads off reciprocal rank and coverage directly.
fn brute_neighborhood(model: &EmbeddingModel<f64>, pairs: &[MisspellingPair], k: usize) -> (f64, f64) {
    let cos = |a: &[f64], b: &[f64]| {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            dot / (na * nb)
        }
    };
    let words: Vec<Vec<f64>> = model
        .vocab()
        .words()
        .iter()
        .map(|w| model.compose_token(w))
        .collect();
    let (mut rr, mut hit) = (0.0, 0.0);
    for p in pairs {
        let q = model.compose_token(&p.misspelling);
        let mut ranked: Vec<(usize, f64)> = words.iter().map(|w| cos(&q, w)).enumerate().collect();
        ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        let expected = model.vocab().id(&p.expected).unwrap() as usize;
        if let Some(pos) = ranked.iter().take(k).position(|r| r.0 == expected) {
            rr += 1.0 / (pos + 1) as f64;
            hit += 1.0;
        }
    }
    (rr / pairs.len() as f64, hit / pairs.len() as f64)
}

#[test]
fn neighborhood_matches_brute_force_ranker() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..30 {
        let words = rng.random_range(2..=50);
        let model = random_model(&mut rng, words, 4);
        let pairs: Vec<MisspellingPair> = (0..20)
            .map(|_| {
                let w = model.vocab().word(rng.random_range(0..words as u32)).to_string();
                let mut m: Vec<char> = w.chars().collect();
                let i = rng.random_range(0..m.len());
                m[i] = ['x', 'y', 'z', '0'][rng.random_range(0..4)];
                MisspellingPair {
                    misspelling: m.into_iter().collect(),
                    expected: w,
                }
            })
            .collect();
        let index = WordIndex::new(&model, Mode::InIn);
        for k in [1, 5, 10] {
            let rep = neighborhood_validity(&model, &index, &pairs, k);
            let (mrr, cov) = brute_neighborhood(&model, &pairs, k);
            assert!((rep.metric("mrr").unwrap() - mrr).abs() < 1e-9, "k={k}");
            assert!((rep.metric("coverage").unwrap() - cov).abs() < 1e-9, "k={k}");
        }
    }
}

proptest! {
    #[test]
    fn spearman_is_invariant_under_monotone_maps(
        xs in prop::collection::vec(-100.0f64..100.0, 2..30),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ys: Vec<f64> = xs.iter().map(|_| rng.random::<f64>()).collect();
        let base = spearman(&xs, &ys);
        let cubed: Vec<f64> = xs.iter().map(|x| x * x * x + 3.0).collect();
        let exp: Vec<f64> = ys.iter().map(|y| (2.0 * y).exp()).collect();
        prop_assert!((spearman(&cubed, &ys) - base).abs() < 1e-12);
        prop_assert!((spearman(&xs, &exp) - base).abs() < 1e-12);
    }

    #[test]
    fn mrr_never_exceeds_coverage(seed in any::<u64>(), k in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let words = rng.random_range(2..30);
        let model = random_model(&mut rng, words, 3);
        let pairs: Vec<MisspellingPair> = (0..10)
            .map(|_| MisspellingPair {
                misspelling: format!("q{}", rng.random_range(0..100)),
                expected: model.vocab().word(rng.random_range(0..words as u32)).to_string(),
            })
            .collect();
        let index = WordIndex::new(&model, Mode::InIn);
        let rep = neighborhood_validity(&model, &index, &pairs, k);
        prop_assert!(rep.metric("mrr").unwrap() <= rep.metric("coverage").unwrap());
    }

    #[test]
    fn knn_ignores_global_rescaling(seed in any::<u64>(), scale in 0.01f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(&mut rng, 20, 4);
        let (vocab, ngram, normalize, mut input, mut output) = model.clone().into_parts();
        input.as_mut_slice().iter_mut().for_each(|x| *x *= scale);
        output.as_mut_slice().iter_mut().for_each(|x| *x *= scale);
        let scaled = EmbeddingModel::from_parts(vocab, ngram, normalize, input, output).unwrap();
        for mode in [Mode::InIn, Mode::InOut] {
            let a = knn(&model, &WordIndex::new(&model, mode), "w03", 5);
            let b = knn(&scaled, &WordIndex::new(&scaled, mode), "w03", 5);
            let names = |v: &[(String, f64)]| v.iter().map(|p| p.0.clone()).collect::<Vec<_>>();
            prop_assert_eq!(names(&a), names(&b));
        }
    }
}
