use std::collections::HashSet;
use std::path::{Path, PathBuf};

use polydef::defgen::{
    examples_from_lexicon, generate_all, generation_to_tsv, init_model, load_checkpoint, save_checkpoint,
    train_defmodel, Conditioning, DefModel, Generator, TrainingExample,
};
use polydef::embeddings::{train_adagram, train_sgns, EmbeddingTable, SenseTable, WordVectors};
use polydef::lexicon::{lexicon_stats, load_lexicon_with_cap, normalize_headword, split_lexicon, Lexicon};
use polydef::matcher::{build_training_pairs, load_pairs, pairs_to_tsv, resolve_pairs, MatchMode};
use polydef::metrics;
use polydef::neural::char_vocabulary;
use polydef::textprep::{build_vocab, tokenize as tokenize_text, Vocabulary};
use serde_json::json;

use crate::config::RunConfig;
use crate::manifest::{sha256_file, write_manifest};
use crate::{read_input, require, write_output, CliError, EmbeddingMode, ModelKind, PairMode, VocabArgs};

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn load_lexicon(cfg: &RunConfig, path: &Path) -> Result<Lexicon, CliError> {
    require(path)?;
    Ok(load_lexicon_with_cap(path, &cfg.profile(), cfg.max_def_len)?)
}

fn read_corpus(path: &Path) -> Result<Vec<Vec<String>>, CliError> {
    Ok(read_input(path)?
        .lines()
        .map(|l| l.split_whitespace().map(str::to_string).collect::<Vec<_>>())
        .filter(|s| !s.is_empty())
        .collect())
}

pub fn tokenize(cfg: &RunConfig, input: &Path, output: &Path) -> Result<(), CliError> {
    let text = read_input(input)?;
    let profile = cfg.profile();
    let mut out = String::new();
    let mut sentences = 0;
    for line in text.lines() {
        let toks = tokenize_text(line, &profile);
        if !toks.is_empty() {
            out.push_str(&toks.join(" "));
            out.push('\n');
            sentences += 1;
        }
    }
    write_output(output, &out)?;
    write_manifest(output, "tokenize", cfg, &[input], &[output], json!({ "sentences": sentences }))?;
    log::info!("{sentences} sentences written to {}", output.display());
    Ok(())
}

pub fn train_embeddings(cfg: &RunConfig, mode: EmbeddingMode, input: &Path, output: &Path) -> Result<(), CliError> {
    let corpus = read_corpus(input)?;
    let (words, dim) = match mode {
        EmbeddingMode::Sgns => {
            let table = train_sgns(&corpus, &cfg.sgns)?;
            table.save(output)?;
            (table.len(), table.dim())
        }
        EmbeddingMode::Adagram => {
            let table = train_adagram(&corpus, &cfg.adagram)?;
            table.save(output)?;
            (table.len(), table.dim())
        }
    };
    let mode_name = match mode {
        EmbeddingMode::Sgns => "sgns",
        EmbeddingMode::Adagram => "adagram",
    };
    write_manifest(
        output,
        "train-embeddings",
        cfg,
        &[input],
        &[output],
        json!({ "mode": mode_name, "words": words, "dim": dim }),
    )?;
    log::info!("{words} {mode_name} vectors of dim {dim} written to {}", output.display());
    Ok(())
}

pub fn stats(cfg: &RunConfig, input: &Path, output: Option<&Path>) -> Result<(), CliError> {
    let lex = load_lexicon(cfg, input)?;
    let line = lexicon_stats(&lex).to_json_line();
    println!("{line}");
    if let Some(out) = output {
        write_output(out, format!("{line}\n"))?;
        write_manifest(out, "stats", cfg, &[input], &[out], json!({}))?;
    }
    Ok(())
}

pub fn split(cfg: &RunConfig, input: &Path, ratios: Option<Vec<f64>>, dir: &Path) -> Result<(), CliError> {
    let ratios = match ratios {
        Some(r) => <[f64; 3]>::try_from(r.as_slice())
            .map_err(|_| CliError::Usage(format!("--ratios takes three values, got {}", r.len())))?,
        None => cfg.split_ratios,
    };
    let lex = load_lexicon(cfg, input)?;
    let parts = split_lexicon(&lex, ratios, cfg.seed)?;
    let paths = ["train.tsv", "dev.tsv", "test.tsv"].map(|n| dir.join(n));
    for (part, path) in [&parts.train, &parts.dev, &parts.test].into_iter().zip(&paths) {
        write_output(path, part.to_tsv())?;
    }
    let outputs: Vec<&Path> = paths.iter().map(PathBuf::as_path).collect();
    write_manifest(
        &dir.join("split"),
        "split",
        cfg,
        &[input],
        &outputs,
        json!({
            "ratios": ratios,
            "sizes": [parts.train.len(), parts.dev.len(), parts.test.len()],
        }),
    )?;
    log::info!(
        "split {} headwords into {}/{}/{}",
        lex.len(),
        parts.train.len(),
        parts.dev.len(),
        parts.test.len()
    );
    Ok(())
}

pub fn build_pairs(
    cfg: &RunConfig,
    mode: PairMode,
    lexicon: &Path,
    senses_path: &Path,
    word_vectors: Option<&Path>,
    stopwords: Option<&Path>,
    output: &Path,
) -> Result<(), CliError> {
    let lex = load_lexicon(cfg, lexicon)?;
    require(senses_path)?;
    let senses = SenseTable::load(senses_path, cfg.prune_threshold)?;
    let stops = cfg.stopwords(stopwords)?;
    let words = match word_vectors {
        Some(p) => {
            require(p)?;
            Some(EmbeddingTable::load(p)?)
        }
        None => None,
    };
    let vectors: &dyn WordVectors = match &words {
        Some(w) => w,
        None => &senses,
    };
    if vectors.dim() != senses.dim() {
        return Err(CliError::Usage(format!(
            "word vectors have dim {}, sense table has {}",
            vectors.dim(),
            senses.dim()
        )));
    }
    let mode = match mode {
        PairMode::D2s => MatchMode::D2S,
        PairMode::S2d => MatchMode::S2D,
    };
    let set = build_training_pairs(&lex, &senses, vectors, &stops, mode, cfg.similarity_floor);
    write_output(output, pairs_to_tsv(&set.pairs))?;
    let mut inputs = vec![lexicon, senses_path];
    inputs.extend(word_vectors);
    inputs.extend(stopwords);
    write_manifest(
        output,
        "build-pairs",
        cfg,
        &inputs,
        &[output],
        json!({
            "mode": mode,
            "pairs": set.pairs.len(),
            "skipped_entries": set.skipped_entries,
            "below_floor": set.below_floor,
        }),
    )?;
    log::info!(
        "{} pairs ({} headwords without senses, {} below floor)",
        set.pairs.len(),
        set.skipped_entries,
        set.below_floor
    );
    Ok(())
}

enum Vectors {
    Words(EmbeddingTable),
    Senses(SenseTable),
}

impl Vectors {
    fn load(cfg: &RunConfig, kind: ModelKind, path: &Path) -> Result<Self, CliError> {
        require(path)?;
        Ok(match kind {
            ModelKind::Base => Vectors::Words(EmbeddingTable::load(path)?),
            ModelKind::Multisense => Vectors::Senses(SenseTable::load(path, cfg.prune_threshold)?),
        })
    }

    fn dim(&self) -> usize {
        match self {
            Vectors::Words(t) => t.dim(),
            Vectors::Senses(t) => t.dim(),
        }
    }

    fn conditioning(&self) -> Conditioning<'_> {
        match self {
            Vectors::Words(t) => Conditioning::Words(t),
            Vectors::Senses(t) => Conditioning::Senses(t),
        }
    }
}

fn examples(cfg: &RunConfig, vectors: &Vectors, path: &Path) -> Result<Vec<TrainingExample>, CliError> {
    match vectors {
        Vectors::Words(table) => {
            let lex = load_lexicon(cfg, path)?;
            Ok(examples_from_lexicon(&lex, table).0)
        }
        Vectors::Senses(table) => {
            require(path)?;
            let records = load_pairs(path)?;
            Ok(resolve_pairs(&records, table)?.iter().map(TrainingExample::from).collect())
        }
    }
}

pub fn train(
    cfg: &RunConfig,
    kind: ModelKind,
    train_path: &Path,
    dev_path: Option<&Path>,
    vectors_path: &Path,
    output: &Path,
) -> Result<(), CliError> {
    let vectors = Vectors::load(cfg, kind, vectors_path)?;
    let train = examples(cfg, &vectors, train_path)?;
    let dev = match dev_path {
        Some(p) => examples(cfg, &vectors, p)?,
        None => Vec::new(),
    };
    if train.is_empty() {
        return Err(CliError::Usage(format!("{} yields no training example", train_path.display())));
    }
    let vocab = build_vocab(train.iter().flat_map(|e| &e.definition), cfg.vocab_min_count, None)?;
    let chars = char_vocabulary(train.iter().map(|e| e.word.as_str()));
    let mut model_cfg = cfg.model.clone();
    model_cfg.condition_dim = vectors.dim();
    let mut model = init_model(&model_cfg, vocab, chars)?;
    log::info!(
        "training on {} examples ({} dev), {} parameters",
        train.len(),
        dev.len(),
        model.num_parameters()
    );
    let report = train_defmodel(&mut model, &train, &dev)?;

    save_checkpoint(&model, output)?;
    let vocab_path = with_suffix(output, ".vocab.tsv");
    let chars_path = with_suffix(output, ".chars.tsv");
    let report_path = with_suffix(output, ".report.json");
    model.vocab.save(&vocab_path)?;
    model.char_vocab.save(&chars_path)?;
    write_output(&report_path, serde_json::to_string_pretty(&report).map_err(polydef::Error::from)?)?;
    let mut inputs = vec![train_path, vectors_path];
    inputs.extend(dev_path);
    write_manifest(
        output,
        "train",
        cfg,
        &inputs,
        &[output, &vocab_path, &chars_path, &report_path],
        json!({
            "model": format!("{kind:?}").to_lowercase(),
            "vocab_digest": model.vocab.digest(),
            "char_vocab_digest": model.char_vocab.digest(),
            "best_epoch": report.best_epoch,
        }),
    )?;
    log::info!(
        "best epoch {} of {}, checkpoint {}",
        report.best_epoch + 1,
        report.train_loss.len(),
        output.display()
    );
    Ok(())
}

fn load_model(checkpoint: &Path, args: &VocabArgs) -> Result<(DefModel, Vec<PathBuf>), CliError> {
    require(checkpoint)?;
    let vocab_path = args.vocab.clone().unwrap_or_else(|| with_suffix(checkpoint, ".vocab.tsv"));
    let chars_path = args.char_vocab.clone().unwrap_or_else(|| with_suffix(checkpoint, ".chars.tsv"));
    require(&vocab_path)?;
    require(&chars_path)?;
    let model = load_checkpoint(checkpoint, Vocabulary::load(&vocab_path)?, Vocabulary::load(&chars_path)?)?;
    Ok((model, vec![checkpoint.to_path_buf(), vocab_path, chars_path]))
}

fn check_dims(model: &DefModel, vectors: &Vectors) -> Result<(), CliError> {
    if model.config.condition_dim != vectors.dim() {
        return Err(CliError::Usage(format!(
            "model expects {}-dim conditioning vectors, got {}",
            model.config.condition_dim,
            vectors.dim()
        )));
    }
    Ok(())
}

/// First tab-separated field of every line, normalized like lexicon
/// headwords, deduplicated in order.
fn read_words(cfg: &RunConfig, path: &Path) -> Result<Vec<String>, CliError> {
    let profile = cfg.profile();
    let mut seen = HashSet::new();
    Ok(read_input(path)?
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| normalize_headword(l.split('\t').next().unwrap_or(""), &profile))
        .filter(|w| !w.is_empty() && seen.insert(w.clone()))
        .collect())
}

pub fn generate(
    cfg: &RunConfig,
    kind: ModelKind,
    checkpoint: &Path,
    vectors_path: &Path,
    words_path: &Path,
    vocab: &VocabArgs,
    output: &Path,
) -> Result<(), CliError> {
    let (model, mut inputs) = load_model(checkpoint, vocab)?;
    let vectors = Vectors::load(cfg, kind, vectors_path)?;
    check_dims(&model, &vectors)?;
    let words = read_words(cfg, words_path)?;
    let (rows, skipped) = generate_all(
        &model,
        &words,
        vectors.conditioning(),
        &cfg.sampling,
        cfg.seed,
        cfg.threads,
    )?;
    write_output(output, generation_to_tsv(&rows))?;
    inputs.push(vectors_path.to_path_buf());
    inputs.push(words_path.to_path_buf());
    let inputs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
    write_manifest(
        output,
        "generate",
        cfg,
        &inputs,
        &[output],
        json!({ "definitions": rows.len(), "words_skipped": skipped }),
    )?;
    log::info!("{} definitions for {} words ({skipped} skipped)", rows.len(), words.len());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn evaluate(
    cfg: &RunConfig,
    kind: ModelKind,
    checkpoint: &Path,
    vectors_path: &Path,
    test_path: &Path,
    runs: Option<usize>,
    vocab: &VocabArgs,
    output: &Path,
    per_word: Option<&Path>,
) -> Result<(), CliError> {
    let (model, mut inputs) = load_model(checkpoint, vocab)?;
    let vectors = Vectors::load(cfg, kind, vectors_path)?;
    check_dims(&model, &vectors)?;
    let test = load_lexicon(cfg, test_path)?;
    let runs = runs.unwrap_or(cfg.eval_runs);
    let generator = Generator {
        model: &model,
        conditioning: vectors.conditioning(),
        sampling: cfg.sampling,
    };
    let echo = json!({
        "run": cfg.to_json(),
        "model": format!("{kind:?}").to_lowercase(),
        "checkpoint_sha256": sha256_file(checkpoint)?,
        "runs": runs,
    });
    let report = metrics::evaluate(&generator, &test, &cfg.bleu, runs, cfg.seed, echo)?;
    write_output(output, report.to_json()?)?;
    let mut outputs = vec![output.to_path_buf()];
    if let Some(p) = per_word {
        write_output(p, report.per_word_tsv())?;
        outputs.push(p.to_path_buf());
    }
    inputs.push(vectors_path.to_path_buf());
    inputs.push(test_path.to_path_buf());
    let inputs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
    let outputs: Vec<&Path> = outputs.iter().map(PathBuf::as_path).collect();
    write_manifest(output, "evaluate", cfg, &inputs, &outputs, json!({}))?;
    println!(
        "BLEU {:.2} ± {:.2}  rBLEU {:.2} ± {:.2}  fBLEU {:.2} ± {:.2}  ({runs} runs)",
        report.mean.bleu, report.stddev.bleu, report.mean.rbleu, report.stddev.rbleu, report.mean.fbleu, report.stddev.fbleu
    );
    Ok(())
}
