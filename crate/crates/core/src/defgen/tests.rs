use super::*;
use crate::embeddings::EmbeddingTable;
use crate::neural::{char_vocabulary, grad_check, Gradients};
use crate::textprep::build_vocab;

fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

fn tiny_config() -> DefModelConfig {
    DefModelConfig {
        condition_dim: 4,
        hidden: 5,
        layers: 2,
        char_embedding_dim: 3,
        char_filters: vec![(2, 2), (3, 2)],
        char_feature_dim: 4,
        condition_projection_dim: 3,
        token_embedding_dim: 4,
        max_def_len: 10,
        lr: 0.01,
        batch_size: 4,
        max_epochs: 5,
        patience: 5,
        clip_norm: 5.0,
        mask_unk: true,
        seed: 3,
    }
}

fn tiny_model(cfg: &DefModelConfig) -> DefModel {
    // four specials plus three words
    let vocab = build_vocab(["a", "b", "c"], 1, None).unwrap();
    let chars = char_vocabulary(["wordx", "abc"]);
    init_model(cfg, vocab, chars).unwrap()
}

fn cond(x: f64) -> Vec<f64> {
    vec![x, -x, 0.5 * x, 1.0]
}

#[test]
fn parameter_count_matches_shapes() {
    let cfg = tiny_config();
    let m = tiny_model(&cfg);
    let v = 7;
    let c = m.char_vocab.len();
    let expected = v * 4                   // token embeddings
        + c * 3                            // char embeddings
        + (2 * 2 * 3 + 2) + (2 * 3 * 3 + 2) // conv2, conv3
        + (3 * (4 + 4) + 3)                // condition projection
        + (20 * (7 + 5) + 20)              // lstm layer 0, input 4 + 3
        + (20 * (5 + 5) + 20)              // lstm layer 1
        + (v * 5 + v); // output
    assert_eq!(m.vocab.len(), v);
    assert_eq!(m.num_parameters(), expected);
}

#[test]
fn default_char_features() {
    let cfg = DefModelConfig::default();
    assert_eq!(cfg.char_filters.iter().map(|f| f.1).sum::<usize>(), 160);
    cfg.validate().unwrap();
}

#[test]
fn init_is_deterministic() {
    let cfg = tiny_config();
    assert_eq!(tiny_model(&cfg).params.flatten(), tiny_model(&cfg).params.flatten());
    let other = DefModelConfig { seed: 4, ..cfg.clone() };
    assert_ne!(tiny_model(&cfg).params.flatten(), tiny_model(&other).params.flatten());
}

#[test]
fn inconsistent_config_rejected() {
    let mut cfg = tiny_config();
    cfg.char_feature_dim = 5;
    assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    let mut cfg = tiny_config();
    cfg.hidden = 0;
    assert!(cfg.validate().is_err());
    let empty = Vocabulary::from_counts(Default::default(), 1, None);
    let chars = char_vocabulary(["ab"]);
    let vocab = build_vocab(["a"], 1, None).unwrap();
    assert!(init_model(&tiny_config(), vocab, empty.clone()).is_err());
    assert!(init_model(&tiny_config(), empty, chars).is_err());
}

#[test]
fn nll_factorizes_over_steps() {
    let m = tiny_model(&tiny_config());
    let def = toks("a c b");
    let dists = m.step_distributions(&cond(0.3), "wordx", &def).unwrap();
    assert_eq!(dists.len(), 4);
    for d in &dists {
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(d.iter().all(|&p| p >= 0.0));
    }
    let gold = [m.vocab.id("a"), m.vocab.id("c"), m.vocab.id("b"), Vocabulary::EOS_ID];
    let product: f64 = dists.iter().zip(gold).map(|(d, g)| d[g]).product();
    let nll = m.sequence_nll(&cond(0.3), "wordx", &def).unwrap();
    assert!(((-4.0 * nll).exp() - product).abs() < 1e-12 * product.max(1e-300) + 1e-15);
}

#[test]
fn nll_is_order_sensitive() {
    let m = tiny_model(&tiny_config());
    let fwd = m.sequence_nll(&cond(0.3), "wordx", &toks("a b c")).unwrap();
    let rev = m.sequence_nll(&cond(0.3), "wordx", &toks("c b a")).unwrap();
    assert_ne!(fwd, rev);
}

#[test]
fn empty_definition_and_bad_condition_rejected() {
    let m = tiny_model(&tiny_config());
    assert!(m.sequence_nll(&cond(0.3), "wordx", &[]).is_err());
    assert!(matches!(
        m.sequence_nll(&[1.0, 2.0], "wordx", &toks("a")),
        Err(Error::Shape(_))
    ));
}

#[test]
fn all_gradients_match_finite_differences() {
    let cfg = tiny_config();
    let mut m = tiny_model(&cfg);
    let scaled: Vec<f64> = m.params.flatten().iter().map(|x| x * 10.0).collect();
    m.params.set_flat(&scaled).unwrap();
    let ids = m.encode(&toks("b a"));
    let template = m.clone();
    let err = grad_check(
        |x: &[f64]| {
            let mut model = template.clone();
            model.params.set_flat(x).unwrap();
            let mut g = Graph::new(&model.params);
            let (loss, n) = model.sequence_graph(&mut g, &cond(0.7), "abc", &ids).unwrap();
            let mut grads = Gradients::zeros_like(&model.params);
            g.backward(loss, 1.0 / n as f64, &mut grads);
            (g.value(loss)[0] / n as f64, grads.flatten())
        },
        &scaled,
        1e-4,
    );
    assert!(err < 1e-3, "max rel err {err}");
}

fn overfit_config() -> DefModelConfig {
    DefModelConfig {
        condition_dim: 4,
        hidden: 16,
        layers: 2,
        char_embedding_dim: 4,
        char_filters: vec![(2, 4), (3, 4)],
        char_feature_dim: 8,
        condition_projection_dim: 8,
        token_embedding_dim: 8,
        max_def_len: 10,
        lr: 0.01,
        batch_size: 2,
        max_epochs: 500,
        patience: 500,
        clip_norm: 5.0,
        mask_unk: true,
        seed: 1,
    }
}

fn example(word: &str, c: Vec<f64>, def: &str) -> TrainingExample {
    TrainingExample {
        word: word.into(),
        condition: c,
        definition: toks(def),
    }
}

fn overfit_model(examples: &[TrainingExample]) -> DefModel {
    let vocab = build_vocab(examples.iter().flat_map(|e| e.definition.clone()), 1, None).unwrap();
    let chars = char_vocabulary(examples.iter().map(|e| e.word.as_str()));
    let mut m = init_model(&overfit_config(), vocab, chars).unwrap();
    train_defmodel(&mut m, examples, &[]).unwrap();
    m
}

#[test]
fn overfits_one_pair() {
    let ex = vec![example("star", cond(0.5), "bright object in the sky")];
    let m = overfit_model(&ex);
    let nll = m.sequence_nll(&ex[0].condition, "star", &ex[0].definition).unwrap();
    assert!(nll < 0.05, "nll {nll}");
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let hits = (0..100)
        .filter(|_| m.sample_definition(&ex[0].condition, "star", 0.1, 60, &mut rng).unwrap() == ex[0].definition)
        .count();
    assert!(hits >= 95, "{hits}/100");
}

#[test]
fn conditioning_selects_sense_after_training() {
    let a = vec![1.0, 0.0, 0.0, 0.0];
    let b = vec![0.0, 1.0, 0.0, 0.0];
    let ex = vec![
        example("bank", a.clone(), "river side land"),
        example("bank", b.clone(), "money lending house"),
    ];
    let m = overfit_model(&ex);
    let first = |c: &[f64]| {
        let d = &m.step_distributions(c, "bank", &[]).unwrap()[0];
        (0..d.len()).fold(0, |best, i| if d[i] > d[best] { i } else { best })
    };
    assert_eq!(first(&a), m.vocab.id("river"));
    assert_eq!(first(&b), m.vocab.id("money"));
    assert_ne!(first(&a), first(&b));
}

#[test]
fn sampling_is_capped_and_deterministic() {
    let m = tiny_model(&tiny_config());
    for len in [1, 3, 8] {
        let mut r1 = ChaCha8Rng::seed_from_u64(5);
        let mut r2 = ChaCha8Rng::seed_from_u64(5);
        let s1 = m.sample_definition(&cond(0.1), "abc", 1.0, len, &mut r1).unwrap();
        let s2 = m.sample_definition(&cond(0.1), "abc", 1.0, len, &mut r2).unwrap();
        assert!(s1.len() <= len);
        assert_eq!(s1, s2);
        assert!(s1.iter().all(|t| t != "<s>" && t != "</s>" && t != "<pad>" && t != "<unk>"));
    }
    let mut r = ChaCha8Rng::seed_from_u64(5);
    assert!(m.sample_definition(&cond(0.1), "abc", 0.0, 5, &mut r).is_err());
}

#[test]
fn generation_cardinality() {
    let m = tiny_model(&tiny_config());
    let v = |x: f64| cond(x);
    let mut table = SenseTable::new(4, 3, 1e-3);
    table.insert("three", &[(v(0.1), 0.4), (v(0.2), 0.3), (v(0.3), 0.3)]).unwrap();
    let pruned = SenseTable::from_parts(
        4,
        2,
        1e-3,
        vec!["two".into()],
        vec![0.99, 0.0001],
        [v(0.1), v(0.2)].concat(),
    );
    let s = SamplingConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    assert_eq!(generate_for_word(&m, "three", Conditioning::Senses(&table), &s, &mut rng).unwrap().len(), 3);
    assert_eq!(generate_for_word(&m, "two", Conditioning::Senses(&pruned), &s, &mut rng).unwrap().len(), 1);
    let mut words = EmbeddingTable::new(4);
    words.insert("three", &v(0.5)).unwrap();
    let base = generate_for_word(&m, "three", Conditioning::Words(&words), &s, &mut rng).unwrap();
    assert_eq!(base.len(), 1);
    assert!(matches!(
        generate_for_word(&m, "nope", Conditioning::Words(&words), &s, &mut rng),
        Err(Error::MissingWord(_))
    ));

    let list = vec!["three".to_string(), "nope".to_string()];
    let (rows, skipped) = generate_all(&m, &list, Conditioning::Senses(&table), &s, 9, 2).unwrap();
    assert_eq!((rows.len(), skipped), (3, 1));
    let (again, _) = generate_all(&m, &list, Conditioning::Senses(&table), &s, 9, 1).unwrap();
    assert_eq!(rows, again);
    assert_eq!(generation_to_tsv(&rows).lines().count(), 3);
}

#[test]
fn training_is_deterministic_and_keeps_best() {
    let mut cfg = tiny_config();
    cfg.max_epochs = 4;
    let train = vec![
        example("abc", cond(0.1), "a b"),
        example("abc", cond(0.2), "b c"),
        example("wordx", cond(0.3), "c a b"),
    ];
    let dev = vec![example("wordx", cond(0.4), "a c")];
    let run = || {
        let mut m = tiny_model(&cfg);
        let rep = train_defmodel(&mut m, &train, &dev).unwrap();
        (m, rep)
    };
    let (m1, r1) = run();
    let (m2, r2) = run();
    assert_eq!(r1, r2);
    assert_eq!(m1.params.flatten(), m2.params.flatten());
    assert_eq!(r1.train_loss.len(), r1.dev_loss.len());
    let best = r1.dev_loss[r1.best_epoch];
    assert!(r1.dev_loss.iter().all(|&d| best <= d));
    let final_dev = corpus_nll(&m1, &dev).unwrap();
    assert!((final_dev - best).abs() < 1e-12);
    assert!(final_dev <= r1.dev_loss[0]);
}

#[test]
fn unusable_pairs_rejected() {
    let mut m = tiny_model(&tiny_config());
    let bad = vec![example("abc", vec![1.0], "a b"), example("abc", cond(0.1), "")];
    assert!(matches!(train_defmodel(&mut m, &bad, &[]), Err(Error::Config(_))));
}

#[test]
fn checkpoint_round_trip() {
    let m = tiny_model(&tiny_config());
    let bytes = write_checkpoint(&m).unwrap();
    assert_eq!(&bytes[..5], b"PDEF1");
    let header = read_header(&bytes).unwrap();
    assert_eq!(header.config, m.config);
    let back = read_checkpoint(&bytes, m.vocab.clone(), m.char_vocab.clone()).unwrap();
    assert_eq!(back.params.flatten(), m.params.flatten());
    let def = toks("a b");
    assert_eq!(
        back.sequence_nll(&cond(0.2), "abc", &def).unwrap(),
        m.sequence_nll(&cond(0.2), "abc", &def).unwrap()
    );
    assert_eq!(write_checkpoint(&back).unwrap(), bytes);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    save_checkpoint(&m, &path).unwrap();
    let loaded = load_checkpoint(&path, m.vocab.clone(), m.char_vocab.clone()).unwrap();
    assert_eq!(loaded.params.flatten(), m.params.flatten());
}

#[test]
fn checkpoint_rejects_mismatch_and_corruption() {
    let m = tiny_model(&tiny_config());
    let bytes = write_checkpoint(&m).unwrap();
    let other = build_vocab(["a", "b", "d"], 1, None).unwrap();
    assert!(matches!(
        read_checkpoint(&bytes, other, m.char_vocab.clone()),
        Err(Error::DigestMismatch { .. })
    ));
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(
        read_checkpoint(&bad, m.vocab.clone(), m.char_vocab.clone()),
        Err(Error::Format(_))
    ));
    assert!(matches!(
        read_checkpoint(&bytes[..bytes.len() - 3], m.vocab.clone(), m.char_vocab.clone()),
        Err(Error::Format(_))
    ));
}
