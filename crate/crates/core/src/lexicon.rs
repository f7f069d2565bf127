//! Word/definition datasets: ingestion, word-disjoint splitting, statistics.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textprep::{tokenize, TokenizerProfile};

pub const DEFAULT_MAX_DEF_LEN: usize = 60;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordEntry {
    pub headword: String,
    /// Tokenized, deduplicated, in first-seen order.
    pub definitions: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Lexicon {
    pub source_tag: String,
    pub language_tag: String,
    entries: BTreeMap<String, WordEntry>,
}

impl Lexicon {
    pub fn new(source_tag: &str, language_tag: &str) -> Self {
        Self {
            source_tag: source_tag.to_string(),
            language_tag: language_tag.to_string(),
            entries: BTreeMap::new(),
        }
    }

    /// Adds a definition, ignoring exact duplicates and empty definitions.
    pub fn add_definition(&mut self, headword: &str, definition: Vec<String>) {
        if definition.is_empty() {
            return;
        }
        let entry = self
            .entries
            .entry(headword.to_string())
            .or_insert_with(|| WordEntry {
                headword: headword.to_string(),
                definitions: Vec::new(),
            });
        if !entry.definitions.contains(&definition) {
            entry.definitions.push(definition);
        }
    }

    pub fn insert(&mut self, entry: WordEntry) {
        self.entries.insert(entry.headword.clone(), entry);
    }

    pub fn get(&self, headword: &str) -> Option<&WordEntry> {
        self.entries.get(headword)
    }

    /// Entries in headword order.
    pub fn entries(&self) -> impl Iterator<Item = &WordEntry> + '_ {
        self.entries.values()
    }

    pub fn headwords(&self) -> impl Iterator<Item = &str> + '_ {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn definition_count(&self) -> usize {
        self.entries.values().map(|e| e.definitions.len()).sum()
    }

    fn subset<'a>(&self, heads: impl Iterator<Item = &'a String>) -> Lexicon {
        let mut out = Lexicon::new(&self.source_tag, &self.language_tag);
        for h in heads {
            out.insert(self.entries[h].clone());
        }
        out
    }

    /// Parses `headword<TAB>definition` lines. `max_def_len` truncates long
    /// definitions.
    pub fn parse(
        text: &str,
        origin: &Path,
        profile: &TokenizerProfile,
        max_def_len: usize,
    ) -> Result<Self> {
        let source = origin
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let mut lex = Lexicon::new(&source, &profile.language_tag);
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (head, def) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(origin, lineno, "expected headword<TAB>definition"))?;
            let head = normalize_headword(head, profile);
            if head.is_empty() {
                return Err(Error::parse(origin, lineno, "empty headword"));
            }
            let mut tokens = tokenize(def, profile);
            if tokens.is_empty() {
                log::warn!("{}:{lineno}: definition of {head:?} is empty, skipped", origin.display());
                continue;
            }
            if tokens.len() > max_def_len {
                log::warn!(
                    "{}:{lineno}: definition of {head:?} truncated from {} to {max_def_len} tokens",
                    origin.display(),
                    tokens.len()
                );
                tokens.truncate(max_def_len);
            }
            lex.add_definition(&head, tokens);
        }
        if lex.is_empty() {
            log::warn!("{}: lexicon is empty", origin.display());
        }
        Ok(lex)
    }

    /// Serializes as lexicon TSV with space-joined definition tokens.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for e in self.entries.values() {
            for d in &e.definitions {
                let _ = writeln!(out, "{}\t{}", e.headword, d.join(" "));
            }
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }
}

/// Headwords go through the same tokenizer as text; multi-token headwords
/// are joined with `_` so they stay a single field.
pub fn normalize_headword(head: &str, profile: &TokenizerProfile) -> String {
    tokenize(head, profile).join("_")
}

pub fn load_lexicon(path: &Path, profile: &TokenizerProfile) -> Result<Lexicon> {
    load_lexicon_with_cap(path, profile, DEFAULT_MAX_DEF_LEN)
}

pub fn load_lexicon_with_cap(
    path: &Path,
    profile: &TokenizerProfile,
    max_def_len: usize,
) -> Result<Lexicon> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Lexicon::parse(&text, path, profile, max_def_len)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitLexicon {
    pub train: Lexicon,
    pub dev: Lexicon,
    pub test: Lexicon,
    pub seed: u64,
    pub ratios: [f64; 3],
}

/// Sizes whose sum is `n`, each within one of `n * ratio`: floors first,
/// then leftover units to the largest fractional parts (earlier part wins
/// ties).
pub fn largest_remainder(n: usize, ratios: [f64; 3]) -> [usize; 3] {
    let exact: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
    // Absorb representation error so that 0.1 * 10 floors to 1, not 0.
    let mut sizes: Vec<usize> = exact.iter().map(|x| (x + 1e-9).floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - sizes[a] as f64;
        let fb = exact[b] - sizes[b] as f64;
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        sizes[i] += 1;
    }
    [sizes[0], sizes[1], sizes[2]]
}

pub fn split_lexicon(lex: &Lexicon, ratios: [f64; 3], seed: u64) -> Result<SplitLexicon> {
    let sum: f64 = ratios.iter().sum();
    if (sum - 1.0).abs() > 1e-9 || ratios.iter().any(|r| !(0.0..=1.0).contains(r)) {
        return Err(Error::Config(format!(
            "split ratios must be probabilities summing to 1, got {ratios:?}"
        )));
    }
    let mut heads: Vec<&String> = lex.entries.keys().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    heads.shuffle(&mut rng);
    let [n_train, n_dev, _] = largest_remainder(heads.len(), ratios);

    let train = lex.subset(heads[..n_train].iter().copied());
    let dev = lex.subset(heads[n_train..n_train + n_dev].iter().copied());
    let test = lex.subset(heads[n_train + n_dev..].iter().copied());
    Ok(SplitLexicon {
        train,
        dev,
        test,
        seed,
        ratios,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub word_count: usize,
    /// Proportion of headwords with at least two definitions.
    pub ppw: f64,
    pub definition_count: usize,
    pub mean_defs_per_word: f64,
}

impl DatasetStats {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("stats serialize")
    }
}

pub fn lexicon_stats(lex: &Lexicon) -> DatasetStats {
    let word_count = lex.len();
    let definition_count = lex.definition_count();
    let polysemous = lex.entries().filter(|e| e.definitions.len() >= 2).count();
    let (ppw, mean) = if word_count == 0 {
        (0.0, 0.0)
    } else {
        (
            polysemous as f64 / word_count as f64,
            definition_count as f64 / word_count as f64,
        )
    };
    DatasetStats {
        word_count,
        ppw,
        definition_count,
        mean_defs_per_word: mean,
    }
}
