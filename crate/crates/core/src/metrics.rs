//! BLEU, recall-oriented rBLEU and their harmonic mean fBLEU.
//!
//! Scores are sentence-level and reported on a 0-100 scale. Word-level
//! scores average sentence scores; dataset scores average word scores; a
//! report averages datasets scores across repeated sampling runs.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::Lexicon;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Smoothing {
    None,
    /// Zero n-gram match counts are replaced by this value.
    Epsilon(f64),
    /// Add one to numerator and denominator for n >= 2.
    AddOneForNGe2,
}

impl Default for Smoothing {
    fn default() -> Self {
        Smoothing::Epsilon(1e-9)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BleuConfig {
    pub max_n: usize,
    pub smoothing: Smoothing,
}

impl Default for BleuConfig {
    fn default() -> Self {
        Self {
            max_n: 4,
            smoothing: Smoothing::default(),
        }
    }
}

fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts
                .entry(w.iter().map(AsRef::as_ref).collect())
                .or_insert(0) += 1;
        }
    }
    counts
}

/// Reference length closest to `hyp_len`; ties go to the shorter reference.
fn closest_ref_len<S>(hyp_len: usize, references: &[Vec<S>]) -> usize {
    references
        .iter()
        .map(Vec::len)
        .min_by_key(|&r| (r.abs_diff(hyp_len), r))
        .unwrap_or(0)
}

/// Sentence-level BLEU of `hypothesis` against `references`, in [0, 100].
pub fn bleu<S, R>(hypothesis: &[S], references: &[Vec<R>], cfg: &BleuConfig) -> Result<f64>
where
    S: AsRef<str>,
    R: AsRef<str>,
{
    if cfg.max_n == 0 {
        return Err(Error::Config("max_n must be at least 1".into()));
    }
    if references.is_empty() {
        return Err(Error::Config("BLEU needs at least one reference".into()));
    }
    if hypothesis.is_empty() {
        log::warn!("empty hypothesis scored as 0");
        return Ok(0.0);
    }

    let mut log_sum = 0.0;
    for n in 1..=cfg.max_n {
        let hyp = ngram_counts(hypothesis, n);
        let mut max_ref: HashMap<Vec<&str>, usize> = HashMap::new();
        for r in references {
            for (g, c) in ngram_counts(r, n) {
                let slot = max_ref.entry(g).or_insert(0);
                *slot = (*slot).max(c);
            }
        }
        let matched: usize = hyp
            .iter()
            .map(|(g, &c)| c.min(max_ref.get(g).copied().unwrap_or(0)))
            .sum();
        let total = hypothesis.len().saturating_sub(n - 1).max(1);
        let precision = match cfg.smoothing {
            Smoothing::None => matched as f64 / total as f64,
            Smoothing::Epsilon(eps) if matched == 0 => eps / total as f64,
            Smoothing::Epsilon(_) => matched as f64 / total as f64,
            Smoothing::AddOneForNGe2 if n >= 2 => (matched + 1) as f64 / (total + 1) as f64,
            Smoothing::AddOneForNGe2 => matched as f64 / total as f64,
        };
        if precision <= 0.0 {
            return Ok(0.0);
        }
        log_sum += precision.ln();
    }

    let c = hypothesis.len();
    let r = closest_ref_len(c, references);
    let brevity = if c < r {
        (1.0 - r as f64 / c as f64).exp()
    } else {
        1.0
    };
    Ok(100.0 * brevity * (log_sum / cfg.max_n as f64).exp())
}

/// Harmonic mean of BLEU and rBLEU; zero when both are zero.
pub fn fbleu(b: f64, r: f64) -> f64 {
    if b + r == 0.0 {
        0.0
    } else {
        2.0 * b * r / (b + r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordScore {
    pub headword: String,
    pub bleu: f64,
    pub rbleu: f64,
    pub fbleu: f64,
    pub n_generated: usize,
    pub n_references: usize,
}

/// BLEU averaged over generated definitions and rBLEU averaged over
/// references, each scored against the other side as the reference set.
pub fn word_scores<S, R>(
    headword: &str,
    generated: &[Vec<S>],
    references: &[Vec<R>],
    cfg: &BleuConfig,
) -> Result<WordScore>
where
    S: AsRef<str>,
    R: AsRef<str>,
{
    if generated.is_empty() || references.is_empty() {
        return Err(Error::Config(format!(
            "cannot score {headword:?}: {} generated, {} references",
            generated.len(),
            references.len()
        )));
    }
    let mut b = 0.0;
    for g in generated {
        b += bleu(g, references, cfg)?;
    }
    let mut r = 0.0;
    for reference in references {
        r += bleu(reference, generated, cfg)?;
    }
    let b = b / generated.len() as f64;
    let r = r / references.len() as f64;
    Ok(WordScore {
        headword: headword.to_string(),
        bleu: b,
        rbleu: r,
        fbleu: fbleu(b, r),
        n_generated: generated.len(),
        n_references: references.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Triple {
    pub bleu: f64,
    pub rbleu: f64,
    pub fbleu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunScores {
    pub seed: u64,
    pub dataset: Triple,
    pub words_scored: usize,
    pub words_skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: serde_json::Value,
    pub bleu_config: BleuConfig,
    pub runs: Vec<RunScores>,
    pub mean: Triple,
    /// Sample standard deviation across runs (zero for a single run).
    pub stddev: Triple,
    /// Per-word scores of the last run, sorted by headword.
    #[serde(skip)]
    pub last_run_words: Vec<WordScore>,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn per_word_tsv(&self) -> String {
        let mut out = String::new();
        for w in &self.last_run_words {
            let _ = writeln!(out, "{}\t{:.4}\t{:.4}\t{:.4}", w.headword, w.bleu, w.rbleu, w.fbleu);
        }
        out
    }
}

/// Source of generated definitions for evaluation.
pub trait DefinitionSource: Sync {
    /// Definitions for `headword`, or `Error::MissingWord` when the word has
    /// no usable representation. `word_index` and `seed` fix the rng stream.
    fn definitions(&self, headword: &str, word_index: usize, seed: u64) -> Result<Vec<Vec<String>>>;
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Scores every headword of `test` over `runs` sampling runs; run `r` uses
/// seed `base_seed + r`.
pub fn evaluate<G: DefinitionSource>(
    source: &G,
    test: &Lexicon,
    bleu_cfg: &BleuConfig,
    runs: usize,
    base_seed: u64,
    config_echo: serde_json::Value,
) -> Result<EvalReport> {
    if runs == 0 {
        return Err(Error::Config("runs must be positive".into()));
    }
    if test.is_empty() {
        return Err(Error::Config("test lexicon is empty".into()));
    }
    let mut run_scores = Vec::with_capacity(runs);
    let mut last_words = Vec::new();
    for r in 0..runs {
        let seed = base_seed + r as u64;
        let mut words = Vec::new();
        let mut skipped = 0;
        for (i, entry) in test.entries().enumerate() {
            let generated = match source.definitions(&entry.headword, i, seed) {
                Ok(g) => g,
                Err(Error::MissingWord(w)) => {
                    log::debug!("skipping {w}: no representation");
                    skipped += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            match word_scores(&entry.headword, &generated, &entry.definitions, bleu_cfg) {
                Ok(s) => words.push(s),
                Err(e) => {
                    log::warn!("{e}");
                    skipped += 1;
                }
            }
        }
        if words.is_empty() {
            return Err(Error::Config("no test word could be scored".into()));
        }
        let n = words.len() as f64;
        let dataset = Triple {
            bleu: words.iter().map(|w| w.bleu).sum::<f64>() / n,
            rbleu: words.iter().map(|w| w.rbleu).sum::<f64>() / n,
            fbleu: words.iter().map(|w| w.fbleu).sum::<f64>() / n,
        };
        run_scores.push(RunScores {
            seed,
            dataset,
            words_scored: words.len(),
            words_skipped: skipped,
        });
        last_words = words;
    }

    let column = |f: fn(&Triple) -> f64| -> (f64, f64) {
        mean_std(&run_scores.iter().map(|r| f(&r.dataset)).collect::<Vec<_>>())
    };
    let (mb, sb) = column(|t| t.bleu);
    let (mr, sr) = column(|t| t.rbleu);
    let (mf, sf) = column(|t| t.fbleu);
    Ok(EvalReport {
        config: config_echo,
        bleu_config: *bleu_cfg,
        runs: run_scores,
        mean: Triple {
            bleu: mb,
            rbleu: mr,
            fbleu: mf,
        },
        stddev: Triple {
            bleu: sb,
            rbleu: sr,
            fbleu: sf,
        },
        last_run_words: last_words,
    })
}
