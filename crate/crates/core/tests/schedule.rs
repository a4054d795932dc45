use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spellvec_core::model::{compose_input, sgns_update, Branch, Scratch, TrainingExample};
use spellvec_core::sampler::NegativeSampler;
use spellvec_core::subword::SubwordTable;
use spellvec_core::trainer::{
    interleave_period, prepare_pairs, run_spans, LearningRate, ScPair, Shared, SharedProgress,
    TrainingConfig, Worker,
};
use spellvec_core::misspell::MisspellingPair;
use spellvec_core::vocab::SubsamplingPolicy;
use spellvec_core::{EmbeddingModel, NgramConfig, Vocabulary};

fn tiny_config(alpha: f64) -> TrainingConfig {
    TrainingConfig {
        alpha,
        dim: 8,
        epochs: 1,
        window: 2,
        negatives: 2,
        ngram: NgramConfig::new(2, 3, 64).unwrap(),
        min_count: 1,
        ..Default::default()
    }
}

fn tiny_vocab() -> Vocabulary {
    let words = ["alpha", "beta", "gamma", "delta", "omega", "sigma"];
    Vocabulary::from_ordered(
        words.iter().map(|w| w.to_string()).collect(),
        vec![10; words.len()],
        1,
    )
    .unwrap()
}

#[test]
fn one_correction_update_per_period_per_epoch() {
    let vocab = tiny_vocab();
    let cfg = TrainingConfig {
        dim: 4,
        negatives: 1,
        window: 1,
        ..tiny_config(0.5)
    };
    let table = SubwordTable::new(&vocab, &cfg.ngram);
    let sampler = NegativeSampler::new(&vocab);
    let policy = SubsamplingPolicy::keep_all(&vocab);
    let pairs = vec![
        ScPair {
            rows: vec![7, 9],
            target: 0,
            misspelling_id: None,
        };
        100
    ];
    let mut model = EmbeddingModel::<f32>::zeros(vocab.clone(), cfg.ngram, cfg.dim, true);
    let shared = Shared {
        table: &table,
        sampler: &sampler,
        policy: &policy,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let tokens: Vec<u32> = (0..10_007).map(|_| rng.random_range(0..6)).collect();
    let k = interleave_period(tokens.len() as u64, pairs.len() as u64);
    assert_eq!(k, 100);
    let mut worker = Worker::new(
        &cfg,
        shared,
        &pairs,
        k,
        ChaCha8Rng::seed_from_u64(1),
        ChaCha8Rng::seed_from_u64(2),
    );
    let schedule = LearningRate::new(cfg.lr0, 2 * tokens.len() as u64);
    let progress = SharedProgress::new();
    for _ in 0..2 {
        worker.begin_epoch();
        run_spans(&mut model, &mut worker, tokens.chunks(333), &schedule, &progress);
        let stats = worker.finish_epoch();
        assert_eq!(stats.tokens, tokens.len() as u64);
        assert_eq!(stats.sc_updates, tokens.len().div_ceil(k as usize) as u64);
    }
    assert_eq!(progress.tokens(), 2 * tokens.len() as u64);
    assert_eq!(progress.sc_updates(), 2 * 101);
}

fn train_in_memory(alpha: f64, pairs: &[ScPair], seed: u64, epochs: u32) -> EmbeddingModel<f32> {
    let vocab = tiny_vocab();
    let cfg = TrainingConfig {
        epochs,
        ..tiny_config(alpha)
    };
    let table = SubwordTable::new(&vocab, &cfg.ngram);
    let sampler = NegativeSampler::new(&vocab);
    let policy = SubsamplingPolicy::new(&vocab, cfg.subsample);
    let mut init = ChaCha8Rng::seed_from_u64(seed);
    let mut model = EmbeddingModel::<f32>::initialized(vocab, cfg.ngram, cfg.dim, true, &mut init);
    let mut corpus_rng = ChaCha8Rng::seed_from_u64(99);
    let tokens: Vec<u32> = (0..3000).map(|_| corpus_rng.random_range(0..6)).collect();
    let shared = Shared {
        table: &table,
        sampler: &sampler,
        policy: &policy,
    };
    let k = interleave_period(tokens.len() as u64, pairs.len().max(1) as u64);
    let mut worker = Worker::new(
        &cfg,
        shared,
        pairs,
        k,
        ChaCha8Rng::seed_from_u64(seed + 1),
        ChaCha8Rng::seed_from_u64(seed + 2),
    );
    let schedule = LearningRate::new(cfg.lr0, epochs as u64 * tokens.len() as u64);
    let progress = SharedProgress::new();
    for _ in 0..epochs {
        worker.begin_epoch();
        run_spans(&mut model, &mut worker, tokens.chunks(100), &schedule, &progress);
        worker.finish_epoch();
    }
    model
}

fn pairs_for_tiny_vocab() -> Vec<ScPair> {
    let vocab = tiny_vocab();
    let ngram = tiny_config(0.0).ngram;
    let raw: Vec<MisspellingPair> = [("alpah", "alpha"), ("btea", "beta"), ("gamam", "gamma"), ("dleta", "delta")]
        .iter()
        .map(|(m, e)| MisspellingPair {
            misspelling: m.to_string(),
            expected: e.to_string(),
        })
        .collect();
    prepare_pairs(&raw, &vocab, &ngram).pairs
}

#[test]
fn zero_alpha_ignores_the_misspelling_set() {
    let pairs = pairs_for_tiny_vocab();
    let with = train_in_memory(0.0, &pairs, 3, 2);
    let without = train_in_memory(0.0, &[], 3, 2);
    assert_eq!(with.input(), without.input());
    assert_eq!(with.output(), without.output());
}

#[test]
fn fixed_seed_training_is_reproducible() {
    let pairs = pairs_for_tiny_vocab();
    let a = train_in_memory(0.3, &pairs, 4, 2);
    let b = train_in_memory(0.3, &pairs, 4, 2);
    assert_eq!(a, b);
    let c = train_in_memory(0.3, &pairs, 5, 2);
    assert_ne!(a.input(), c.input());
    assert!(a.all_finite());
}

#[test]
fn full_alpha_leaves_output_matrix_untouched() {
    let pairs = pairs_for_tiny_vocab();
    let m = train_in_memory(1.0, &pairs, 6, 1);
    assert!(m.output().as_slice().iter().all(|&x| x == 0.0));
}

proptest! {
    #[test]
    fn averaged_composition_ignores_duplication(
        rows in prop::collection::vec(0u32..70, 1..8),
        k in 2usize..5,
        seed in any::<u64>(),
    ) {
        let vocab = tiny_vocab();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = EmbeddingModel::<f64>::initialized(vocab, tiny_config(0.0).ngram, 8, true, &mut rng);
        let mut once = vec![0.0; 8];
        let mut many = vec![0.0; 8];
        compose_input(&m, &rows, true, &mut once);
        let repeated: Vec<u32> = (0..k).flat_map(|_| rows.iter().copied()).collect();
        compose_input(&m, &repeated, true, &mut many);
        for (a, b) in once.iter().zip(&many) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn updates_touch_only_their_rows(
        seed in any::<u64>(),
        sc in any::<bool>(),
    ) {
        let vocab = tiny_vocab();
        let words = vocab.len() as u32;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = EmbeddingModel::<f64>::initialized(vocab, tiny_config(0.0).ngram, 8, true, &mut rng);
        for x in m.output_mut().as_mut_slice() {
            *x = rng.random_range(-0.5..0.5);
        }
        let before = m.clone();
        let inputs: Vec<u32> = if sc {
            (0..3).map(|_| rng.random_range(words..words + 64)).collect()
        } else {
            vec![rng.random_range(0..words), rng.random_range(words..words + 64)]
        };
        let target = rng.random_range(0..words);
        let negatives = [(target + 1) % words, (target + 2) % words];
        let ex = TrainingExample {
            inputs: &inputs,
            target,
            negatives: &negatives,
            branch: if sc { Branch::Sc } else { Branch::Ft },
        };
        sgns_update(&mut m, &ex, true, 0.1, 1.0, &mut Scratch::new(8));
        let mut allowed_inputs: Vec<u32> = inputs.clone();
        if sc {
            allowed_inputs.push(target);
            allowed_inputs.extend(negatives);
            prop_assert_eq!(m.output(), before.output());
        }
        for r in 0..m.input().rows() as u32 {
            if !allowed_inputs.contains(&r) {
                prop_assert_eq!(m.input().row(r as usize), before.input().row(r as usize));
            }
        }
    }
}
