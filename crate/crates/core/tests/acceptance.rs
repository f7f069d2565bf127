//! Acceptance criteria. Every test prints one `PASS`/`FAIL`/`SKIP` line.
//! Criteria run one at a time so wall-clock limits are not distorted by
//! sibling tests sharing the CPU.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use polydef::defgen::*;
use polydef::embeddings::*;
use polydef::lexicon::{largest_remainder, lexicon_stats, load_lexicon, split_lexicon, Lexicon};
use polydef::matcher::{build_training_pairs, MatchMode};
use polydef::metrics::{bleu, evaluate, fbleu, BleuConfig, Smoothing};
use polydef::neural::{char_vocabulary, CharCnn, Gradients, Graph, Lstm, ParamStore, Var};
use polydef::synth::*;
use polydef::textprep::{build_vocab, StopwordSet, TokenizerProfile};
use proptest::prelude::*;
use proptest::test_runner::{Config as PtConfig, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

/// Written to the process's stderr directly so the line shows up even when
/// the harness captures test output.
fn report(line: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stderr().lock(), "{line}");
}

fn verdict(id: u32, name: &str, pass: bool, elapsed: Duration, limit: Duration, detail: &str) {
    let ok = pass && elapsed < limit;
    report(&format!(
        "{} criterion {id} ({name}): {detail}; {:.1}s of {:.0}s",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs_f64()
    ));
    assert!(pass, "criterion {id} failed: {detail}");
    assert!(elapsed < limit, "criterion {id} over time: {elapsed:?}");
}

fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

#[test]
fn criterion_1_fbleu_identity() {
    let _g = serial();
    let t0 = Instant::now();
    let text = include_str!("fixtures/published_scores.tsv");
    let mut worst = 0.0f64;
    let mut rows = 0;
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split('\t').collect();
        let [b, r, printed] = [f[3], f[4], f[5]].map(|x| x.parse::<f64>().unwrap());
        worst = worst.max((fbleu(b, r) - printed).abs());
        rows += 1;
    }
    assert!((fbleu(12.12, 11.55) - 11.83).abs() < 0.015);
    assert!((fbleu(20.21, 16.88) - 18.40).abs() < 0.015);
    verdict(
        1,
        "fBLEU identity",
        rows == 45 && worst <= 0.015,
        t0.elapsed(),
        Duration::from_secs(1),
        &format!("{rows} rows, max |fbleu - printed| = {worst:.4}"),
    );
}

/// Independent BLEU: n-grams compared position by position, no hashing.
fn oracle_bleu(hyp: &[String], refs: &[Vec<String>], max_n: usize, eps: f64) -> f64 {
    if hyp.is_empty() {
        return 0.0;
    }
    let count_in = |seq: &[String], gram: &[String]| -> usize {
        if seq.len() < gram.len() {
            return 0;
        }
        (0..=seq.len() - gram.len()).filter(|&i| seq[i..i + gram.len()] == *gram).count()
    };
    let mut log_p = 0.0;
    for n in 1..=max_n {
        let positions = if hyp.len() >= n { hyp.len() - n + 1 } else { 0 };
        let mut seen: Vec<&[String]> = Vec::new();
        let mut clipped = 0;
        for i in 0..positions {
            let gram = &hyp[i..i + n];
            if seen.contains(&gram) {
                continue;
            }
            seen.push(gram);
            let max_ref = refs.iter().map(|r| count_in(r, gram)).max().unwrap_or(0);
            clipped += count_in(hyp, gram).min(max_ref);
        }
        let denom = positions.max(1) as f64;
        let p = if clipped == 0 { eps / denom } else { clipped as f64 / denom };
        log_p += p.ln();
    }
    let c = hyp.len() as i64;
    let mut r = refs[0].len() as i64;
    for x in refs {
        let l = x.len() as i64;
        if (l - c).abs() < (r - c).abs() || ((l - c).abs() == (r - c).abs() && l < r) {
            r = l;
        }
    }
    let bp = if c < r { (1.0 - r as f64 / c as f64).exp() } else { 1.0 };
    100.0 * bp * (log_p / max_n as f64).exp()
}

#[test]
fn criterion_2_bleu_oracle() {
    let _g = serial();
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let vocab: Vec<String> = (0..10).map(|i| format!("w{i}")).collect();
    let sentence = |rng: &mut ChaCha8Rng| -> Vec<String> {
        let len = rng.gen_range(1..=12);
        (0..len).map(|_| vocab[rng.gen_range(0..10)].clone()).collect()
    };
    let cfg = BleuConfig {
        max_n: 4,
        smoothing: Smoothing::Epsilon(1e-9),
    };
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let hyp = sentence(&mut rng);
        let n_refs = rng.gen_range(1..=4);
        let refs: Vec<Vec<String>> = (0..n_refs).map(|_| sentence(&mut rng)).collect();
        let got = bleu(&hyp, &refs, &cfg).unwrap();
        worst = worst.max((got - oracle_bleu(&hyp, &refs, 4, 1e-9)).abs());
    }
    verdict(
        2,
        "BLEU oracle",
        worst <= 1e-9,
        t0.elapsed(),
        Duration::from_secs(10),
        &format!("200 instances, max |artifact - oracle| = {worst:.2e}"),
    );
}

/// Max relative error per parameter group of analytic vs central-difference
/// gradients. Groups are parameter-name prefixes.
fn grouped_fd(store: &ParamStore, analytic: &[f64], mut loss: impl FnMut(&ParamStore) -> f64, eps: f64) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    let mut probe = store.clone();
    let mut flat = store.flatten();
    let mut offset = 0;
    let names: Vec<(String, usize)> = store.iter().map(|(n, t)| (n.to_string(), t.len())).collect();
    for (name, len) in names {
        let group = name.split('.').next().unwrap().trim_end_matches(char::is_numeric).to_string();
        for i in offset..offset + len {
            let orig = flat[i];
            flat[i] = orig + eps;
            probe.set_flat(&flat).unwrap();
            let plus = loss(&probe);
            flat[i] = orig - eps;
            probe.set_flat(&flat).unwrap();
            let minus = loss(&probe);
            flat[i] = orig;
            let numeric = (plus - minus) / (2.0 * eps);
            let err = (analytic[i] - numeric).abs() / analytic[i].abs().max(numeric.abs()).max(1e-8);
            let e = out.entry(group.clone()).or_insert(0.0f64);
            *e = e.max(err);
        }
        offset += len;
    }
    out
}

#[test]
fn criterion_3_gradient_checks() {
    let _g = serial();
    let t0 = Instant::now();
    let eps = 1e-4;
    let mut errors: BTreeMap<String, f64> = BTreeMap::new();

    // full definition model: vocab 7 (4 specials + 3 words), hidden 5, 2 layers
    let cfg = DefModelConfig {
        condition_dim: 4,
        hidden: 5,
        layers: 2,
        char_embedding_dim: 3,
        char_filters: vec![(2, 2), (3, 2)],
        char_feature_dim: 4,
        condition_projection_dim: 3,
        token_embedding_dim: 4,
        ..Default::default()
    };
    let vocab = build_vocab(["x", "y", "z"], 1, None).unwrap();
    assert_eq!(vocab.len(), 7);
    let mut model = init_model(&cfg, vocab, char_vocabulary(["target"])).unwrap();
    let scaled: Vec<f64> = model.params.flatten().iter().map(|v| v * 10.0).collect();
    model.params.set_flat(&scaled).unwrap();
    let condition = [0.3, -0.8, 0.5, 0.1];
    let def = toks("y x");
    let (_, grads) = model.loss_and_gradients(&condition, "target", &def).unwrap();
    let template = model.clone();
    let per_group = grouped_fd(
        &model.params,
        &grads.flatten(),
        |p| {
            let mut m = template.clone();
            m.params = p.clone();
            m.sequence_nll(&condition, "target", &def).unwrap()
        },
        eps,
    );
    errors.extend(per_group.into_iter().map(|(k, v)| (format!("model.{k}"), v)));

    // standalone LSTM and char-CNN through random linear readouts
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut store = ParamStore::new();
    let lstm = Lstm::new(&mut store, "lstm", 3, 5, 2, &mut rng);
    let chars = char_vocabulary(["abcde"]);
    let cnn = CharCnn::new(&mut store, "cnn", chars.len(), 4, &[(2, 3), (3, 3)], &mut rng);
    let scaled: Vec<f64> = store.flatten().iter().map(|v| v * 10.0).collect();
    store.set_flat(&scaled).unwrap();
    let readout: Vec<f64> = (0..32).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let ids = cnn.char_ids("badce", &chars);
    let build = |s: &ParamStore, grads: Option<&mut Gradients>| -> f64 {
        let mut g = Graph::new(s);
        let xs: Vec<Var> = (0..3).map(|i| g.input(&[0.4 * i as f64, -0.5, 0.9])).collect();
        let (hs, _) = lstm.forward(&mut g, &xs, None).unwrap();
        let feats = cnn.forward(&mut g, &ids).unwrap();
        let mut parts = hs.clone();
        parts.push(feats);
        let all = g.concat(&parts);
        let n = g.value(all).len();
        let w = g.input(&readout[..n]);
        let prod = g.mul(all, w).unwrap();
        let loss = g.total(prod);
        if let Some(gr) = grads {
            g.backward(loss, 1.0, gr);
        }
        g.value(loss)[0]
    };
    let mut grads = Gradients::zeros_like(&store);
    build(&store, Some(&mut grads));
    errors.extend(grouped_fd(&store, &grads.flatten(), |s| build(s, None), eps));

    // softmax + cross-entropy with respect to the logits
    let empty = ParamStore::new();
    let logits = [0.2, -1.3, 0.7, 2.1, -0.4, 0.0, 1.1];
    let xent = |l: &[f64]| -> (f64, Vec<f64>) {
        let mut g = Graph::new(&empty);
        let v = g.input(l);
        let loss = g.softmax_xent(v, 3).unwrap();
        let mut gr = Gradients::zeros_like(&empty);
        let node = g.backward(loss, 1.0, &mut gr);
        (g.value(loss)[0], node[v.index()].clone())
    };
    let (_, analytic) = xent(&logits);
    let mut worst = 0.0f64;
    for i in 0..logits.len() {
        let mut p = logits;
        p[i] += eps;
        let mut m = logits;
        m[i] -= eps;
        let numeric = (xent(&p).0 - xent(&m).0) / (2.0 * eps);
        worst = worst.max((analytic[i] - numeric).abs() / analytic[i].abs().max(numeric.abs()).max(1e-8));
    }
    errors.insert("softmax_xent".into(), worst);

    let max = errors.values().copied().fold(0.0, f64::max);
    let detail = errors
        .iter()
        .map(|(k, v)| format!("{k} {v:.1e}"))
        .collect::<Vec<_>>()
        .join(", ");
    let needed = ["model.char_cnn", "model.condition_projection", "model.lstm", "model.output", "lstm", "cnn", "softmax_xent"];
    let covered = needed.iter().all(|k| errors.contains_key(*k));
    verdict(3, "gradient checks", covered && max < 1e-3, t0.elapsed(), Duration::from_secs(30), &detail);
}

#[test]
fn criterion_4_overfit_ten_pairs() {
    let _g = serial();
    let t0 = Instant::now();
    // 26 content words + 4 specials = vocab 30
    let words: Vec<String> = (b'a'..=b'z').map(|c| format!("{}{}", c as char, c as char)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let examples: Vec<TrainingExample> = (0..10)
        .map(|i| {
            let len = rng.gen_range(3..=6);
            TrainingExample {
                word: format!("head{i}"),
                condition: (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                definition: (0..len).map(|j| words[(i * 7 + j * 3 + rng.gen_range(0..2)) % 26].clone()).collect(),
            }
        })
        .collect();
    let vocab = build_vocab(words.iter(), 1, None).unwrap();
    assert_eq!(vocab.len(), 30);
    let chars = char_vocabulary(examples.iter().map(|e| e.word.as_str()));
    let cfg = DefModelConfig {
        condition_dim: 8,
        hidden: 32,
        layers: 2,
        char_embedding_dim: 8,
        char_filters: vec![(2, 8), (3, 8)],
        char_feature_dim: 16,
        condition_projection_dim: 16,
        token_embedding_dim: 16,
        lr: 0.01,
        batch_size: 5,
        max_epochs: 300,
        patience: 300,
        seed: 4,
        ..Default::default()
    };
    let mut model = init_model(&cfg, vocab, chars).unwrap();
    let report = train_defmodel(&mut model, &examples, &[]).unwrap();
    let ppl = corpus_nll(&model, &examples).unwrap().exp();
    let mut sample_rng = ChaCha8Rng::seed_from_u64(40);
    let hits: Vec<usize> = examples
        .iter()
        .map(|e| {
            (0..100)
                .filter(|_| {
                    model
                        .sample_definition(&e.condition, &e.word, 0.1, 60, &mut sample_rng)
                        .unwrap()
                        == e.definition
                })
                .count()
        })
        .collect();
    let min_hits = *hits.iter().min().unwrap();
    verdict(
        4,
        "overfit sanity",
        ppl < 1.5 && min_hits >= 95,
        t0.elapsed(),
        Duration::from_secs(300),
        &format!(
            "perplexity {ppl:.4} after {} epochs, fewest exact samples {min_hits}/100",
            report.train_loss.len()
        ),
    );
}

fn lexicon_strategy() -> impl Strategy<Value = (Vec<(String, usize)>, u64, [f64; 3])> {
    (
        prop::collection::btree_map("[a-z]{1,6}", 1usize..4, 0..60),
        any::<u64>(),
        (1u32..20, 0u32..10, 0u32..10),
    )
        .prop_map(|(words, seed, (a, b, c))| {
            let s = (a + b + c) as f64;
            let ratios = [a as f64 / s, b as f64 / s, (1.0 - a as f64 / s - b as f64 / s).max(0.0)];
            (words.into_iter().collect(), seed, ratios)
        })
}

#[test]
fn criterion_5_split_integrity() {
    let _g = serial();
    let t0 = Instant::now();
    let mut runner = TestRunner::new(PtConfig {
        cases: 100,
        failure_persistence: None,
        ..PtConfig::default()
    });
    let outcome = runner.run(&lexicon_strategy(), |(words, seed, ratios)| {
        let mut lex = Lexicon::new("prop", "en");
        for (w, n) in &words {
            for k in 0..*n {
                lex.add_definition(w, vec![format!("def{k}")]);
            }
        }
        let a = split_lexicon(&lex, ratios, seed).unwrap();
        let b = split_lexicon(&lex, ratios, seed).unwrap();
        prop_assert_eq!(&a.train, &b.train);
        prop_assert_eq!(&a.dev, &b.dev);
        prop_assert_eq!(&a.test, &b.test);

        let parts = [&a.train, &a.dev, &a.test];
        let mut seen = HashSet::new();
        for p in parts {
            for e in p.entries() {
                prop_assert!(seen.insert(e.headword.clone()), "{} in two parts", e.headword);
                prop_assert_eq!(Some(e), lex.get(&e.headword));
            }
        }
        prop_assert_eq!(seen.len(), lex.len());

        // largest remainder, computed independently
        let n = lex.len();
        let exact: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
        let mut sizes: Vec<usize> = exact.iter().map(|x| (x + 1e-9).floor() as usize).collect();
        let left = n - sizes.iter().sum::<usize>();
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&i, &j| {
            (exact[j] - sizes[j] as f64)
                .partial_cmp(&(exact[i] - sizes[i] as f64))
                .unwrap()
                .then(i.cmp(&j))
        });
        for &i in idx.iter().take(left) {
            sizes[i] += 1;
        }
        let got = [a.train.len(), a.dev.len(), a.test.len()];
        prop_assert_eq!(got.to_vec(), sizes);
        prop_assert_eq!(got, largest_remainder(n, ratios));
        for (s, x) in got.iter().zip(&exact) {
            prop_assert!((*s as f64 - x).abs() < 1.0 + 1e-9);
        }
        Ok(())
    });
    verdict(
        5,
        "split integrity",
        outcome.is_ok(),
        t0.elapsed(),
        Duration::from_secs(5),
        &match &outcome {
            Ok(()) => "100 random lexicons: disjoint, exact sizes, deterministic".to_string(),
            Err(e) => e.to_string(),
        },
    );
}

#[test]
fn criterion_6_sense_induction() {
    let _g = serial();
    let t0 = Instant::now();
    let pseudo = Pseudoword {
        word: "blorpx".into(),
        topics: vec![0, 1],
    };
    let spec = CorpusSpec {
        sentences: 167_000,
        pseudo_rate: 0.05,
        seed: 6,
        ..CorpusSpec::default()
    };
    let corpus = generate_corpus(&spec, std::slice::from_ref(&pseudo));
    let tokens: usize = corpus.iter().map(Vec::len).sum();
    let cfg = AdagramConfig {
        dim: 50,
        epochs: 3,
        seed: 6,
        ..AdagramConfig::default()
    };
    let table = train_adagram(&corpus, &cfg).unwrap();
    let senses = table.senses(&pseudo.word).unwrap();
    let mut dominant = Vec::new();
    let mut lines = Vec::new();
    let mut all_pure = true;
    for s in &senses {
        let nn = nearest_words(&table, s.vector, 10, &pseudo.word);
        let mut per_topic: HashMap<usize, usize> = HashMap::new();
        for (w, _) in &nn {
            if let Some(t) = topic_of(w) {
                *per_topic.entry(t).or_default() += 1;
            }
        }
        let (topic, count) = per_topic.iter().max_by_key(|(t, c)| (**c, std::cmp::Reverse(**t))).map(|(t, c)| (*t, *c)).unwrap_or((usize::MAX, 0));
        let share = count as f64 / nn.len().max(1) as f64;
        all_pure &= share >= 0.7 && pseudo.topics.contains(&topic);
        dominant.push(topic);
        lines.push(format!("prior {:.3} -> {} {:.0}%", s.prior, TOPICS.get(topic).map_or("none", |t| t.name), share * 100.0));
    }
    let both_topics = pseudo.topics.iter().all(|t| dominant.contains(t));
    verdict(
        6,
        "sense induction",
        senses.len() >= 2 && all_pure && both_topics,
        t0.elapsed(),
        Duration::from_secs(600),
        &format!("{tokens} tokens, {} retained senses [{}]", senses.len(), lines.join("; ")),
    );
}

struct PipelineScores {
    base_rbleu: f64,
    multi_rbleu: f64,
}

/// Base (word vectors, one definition per word) versus multi-sense D2S
/// (sense vectors, one definition per retained sense) on held-out
/// two-sense pseudowords, scored over 10 sampling runs.
fn two_sense_pipeline(seed: u64) -> PipelineScores {
    let dim = 30;
    let pseudowords = pseudowords_for_pairs(2, seed);
    let spec = CorpusSpec {
        sentences: 40_000,
        seed,
        ..CorpusSpec::default()
    };
    let corpus = generate_corpus(&spec, &pseudowords);
    let words = train_sgns(
        &corpus,
        &SgnsConfig {
            dim,
            epochs: 3,
            seed,
            ..SgnsConfig::default()
        },
    )
    .unwrap();
    let senses = train_adagram(
        &corpus,
        &AdagramConfig {
            dim,
            epochs: 3,
            seed,
            ..AdagramConfig::default()
        },
    )
    .unwrap();

    let lex = generate_lexicon(&pseudowords);
    let held_out: HashSet<&str> = pseudowords[..6].iter().map(|p| p.word.as_str()).collect();
    let mut train = Lexicon::new("synthetic", "en");
    let mut test = Lexicon::new("synthetic", "en");
    for e in lex.entries() {
        let part = if held_out.contains(e.headword.as_str()) { &mut test } else { &mut train };
        for d in &e.definitions {
            part.add_definition(&e.headword, d.clone());
        }
    }

    let stops = StopwordSet::builtin("en").unwrap();
    let pairs = build_training_pairs(&train, &senses, &senses, &stops, MatchMode::D2S, None);
    let multi_examples: Vec<TrainingExample> = pairs.pairs.iter().map(TrainingExample::from).collect();
    let (base_examples, _) = examples_from_lexicon(&train, &words);

    let vocab = build_vocab(train.entries().flat_map(|e| e.definitions.iter().flatten()), 1, None).unwrap();
    let chars = char_vocabulary(lex.headwords());
    let cfg = DefModelConfig {
        condition_dim: dim,
        hidden: 32,
        layers: 2,
        char_embedding_dim: 8,
        char_filters: vec![(2, 8), (3, 8)],
        char_feature_dim: 16,
        condition_projection_dim: 32,
        token_embedding_dim: 16,
        lr: 0.01,
        batch_size: 8,
        max_epochs: 20,
        patience: 20,
        seed,
        ..Default::default()
    };
    let mut base = init_model(&cfg, vocab.clone(), chars.clone()).unwrap();
    train_defmodel(&mut base, &base_examples, &[]).unwrap();
    let mut multi = init_model(&cfg, vocab, chars).unwrap();
    train_defmodel(&mut multi, &multi_examples, &[]).unwrap();

    let sampling = SamplingConfig::default();
    let bleu_cfg = BleuConfig::default();
    let score = |g: &Generator| evaluate(g, &test, &bleu_cfg, 10, seed * 100, serde_json::Value::Null).unwrap();
    let base_report = score(&Generator {
        model: &base,
        conditioning: Conditioning::Words(&words),
        sampling,
    });
    let multi_report = score(&Generator {
        model: &multi,
        conditioning: Conditioning::Senses(&senses),
        sampling,
    });
    PipelineScores {
        base_rbleu: base_report.mean.rbleu,
        multi_rbleu: multi_report.mean.rbleu,
    }
}

#[test]
fn criterion_7_multisense_beats_base() {
    let _g = serial();
    let t0 = Instant::now();
    let runs: Vec<PipelineScores> = (1..=10).map(two_sense_pipeline).collect();
    let base = runs.iter().map(|r| r.base_rbleu).sum::<f64>() / runs.len() as f64;
    let multi = runs.iter().map(|r| r.multi_rbleu).sum::<f64>() / runs.len() as f64;
    let wins = runs.iter().filter(|r| r.multi_rbleu > r.base_rbleu).count();
    verdict(
        7,
        "multi-sense D2S vs base",
        multi > base,
        t0.elapsed(),
        Duration::from_secs(1800),
        &format!("mean rBLEU over 10 seeded pipelines: D2S {multi:.2} vs base {base:.2} (D2S ahead in {wins}/10)"),
    );
}

fn omegawiki_dutch() -> Option<PathBuf> {
    if let Ok(p) = std::env::var("POLYDEF_OMEGAWIKI_NL") {
        return Some(PathBuf::from(p));
    }
    let default = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/omegawiki/nl.tsv");
    default.exists().then_some(default)
}

#[test]
fn criterion_8_published_statistics() {
    let _g = serial();
    report("NOTE criterion 8: published absolute BLEU/rBLEU/fBLEU values are not reproducible at desk scale; criteria 1 and 7 stand in for them");
    let Some(path) = omegawiki_dutch() else {
        report("SKIP criterion 8 (published dataset statistics): Dutch OmegaWiki lexicon not present (set POLYDEF_OMEGAWIKI_NL or add data/omegawiki/nl.tsv)");
        return;
    };
    let t0 = Instant::now();
    let lex = load_lexicon(&path, &TokenizerProfile::for_language("nl")).unwrap();
    let stats = lexicon_stats(&lex);
    verdict(
        8,
        "published dataset statistics",
        stats.word_count == 13093 && (stats.ppw - 0.18).abs() <= 0.005,
        t0.elapsed(),
        Duration::from_secs(600),
        &format!("{} words, PPW {:.4}", stats.word_count, stats.ppw),
    );
}
