//! Pairing sense vectors with definitions by cosine similarity.
//!
//! D2S sends every definition to its most similar sense; S2D sends every
//! sense to its most similar definition.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::embeddings::{cosine, SenseTable, WordVectors};
use crate::error::{Error, Result};
use crate::lexicon::{Lexicon, WordEntry};
use crate::textprep::StopwordSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    D2S,
    S2D,
}

impl FromStr for MatchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "d2s" => Ok(MatchMode::D2S),
            "s2d" => Ok(MatchMode::S2D),
            other => Err(Error::Config(format!("unknown match mode {other:?}, expected d2s or s2d"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SenseDefPair {
    pub headword: String,
    /// Position in the headword's retained-sense list.
    pub sense_index: usize,
    pub sense_vector: Vec<f64>,
    pub definition: Vec<String>,
}

/// Mean of the vectors of in-vocabulary non-stopword tokens, or of all
/// in-vocabulary tokens when every one of them is a stopword.
pub fn embed_definition(def: &[String], vectors: &dyn WordVectors, stops: &StopwordSet) -> Result<Vec<f64>> {
    let known: Vec<(&String, &[f64])> = def
        .iter()
        .filter_map(|t| vectors.vector(t).map(|v| (t, v)))
        .collect();
    if known.is_empty() {
        return Err(Error::Unrepresentable(def.join(" ")));
    }
    let content: Vec<&[f64]> = known
        .iter()
        .filter(|(t, _)| !stops.contains(t))
        .map(|(_, v)| *v)
        .collect();
    let chosen: Vec<&[f64]> = if content.is_empty() {
        known.iter().map(|(_, v)| *v).collect()
    } else {
        content
    };
    let mut mean = vec![0.0; vectors.dim()];
    for v in &chosen {
        for (m, x) in mean.iter_mut().zip(v.iter()) {
            *m += x;
        }
    }
    let n = chosen.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    Ok(mean)
}

struct Scored {
    sense: usize,
    definition: usize,
    similarity: f64,
}

fn similarity(a: &[f64], b: &[f64]) -> f64 {
    cosine(a, b).unwrap_or(f64::NEG_INFINITY)
}

/// First index with the strictly largest value.
fn argmax(values: impl Iterator<Item = f64>) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        if best.map_or(true, |(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best
}

fn representable(entry: &WordEntry, vectors: &dyn WordVectors, stops: &StopwordSet) -> Vec<(usize, Vec<f64>)> {
    entry
        .definitions
        .iter()
        .enumerate()
        .filter_map(|(i, d)| match embed_definition(d, vectors, stops) {
            Ok(v) => Some((i, v)),
            Err(e) => {
                log::warn!("{}: definition {i} skipped: {e}", entry.headword);
                None
            }
        })
        .collect()
}

fn score(entry: &WordEntry, senses: &[&[f64]], vectors: &dyn WordVectors, stops: &StopwordSet, mode: MatchMode) -> Vec<Scored> {
    let defs = representable(entry, vectors, stops);
    if defs.is_empty() {
        log::warn!("{}: no representable definition", entry.headword);
        return Vec::new();
    }
    if senses.is_empty() {
        log::warn!("{}: no retained sense", entry.headword);
        return Vec::new();
    }
    let mut out = match mode {
        MatchMode::D2S => defs
            .iter()
            .filter_map(|(d, emb)| {
                argmax(senses.iter().map(|s| similarity(s, emb))).map(|(sense, similarity)| Scored {
                    sense,
                    definition: *d,
                    similarity,
                })
            })
            .collect::<Vec<_>>(),
        MatchMode::S2D => senses
            .iter()
            .enumerate()
            .filter_map(|(sense, s)| {
                argmax(defs.iter().map(|(_, emb)| similarity(s, emb))).map(|(j, similarity)| Scored {
                    sense,
                    definition: defs[j].0,
                    similarity,
                })
            })
            .collect::<Vec<_>>(),
    };
    out.sort_by_key(|p| (p.sense, p.definition));
    out
}

fn to_pairs(entry: &WordEntry, senses: &[&[f64]], scored: Vec<Scored>) -> Vec<SenseDefPair> {
    scored
        .into_iter()
        .map(|s| SenseDefPair {
            headword: entry.headword.clone(),
            sense_index: s.sense,
            sense_vector: senses[s.sense].to_vec(),
            definition: entry.definitions[s.definition].clone(),
        })
        .collect()
}

/// One pair per representable definition, with the most similar sense.
pub fn match_d2s(entry: &WordEntry, senses: &[&[f64]], vectors: &dyn WordVectors, stops: &StopwordSet) -> Vec<SenseDefPair> {
    to_pairs(entry, senses, score(entry, senses, vectors, stops, MatchMode::D2S))
}

/// One pair per sense, with the most similar representable definition.
pub fn match_s2d(entry: &WordEntry, senses: &[&[f64]], vectors: &dyn WordVectors, stops: &StopwordSet) -> Vec<SenseDefPair> {
    to_pairs(entry, senses, score(entry, senses, vectors, stops, MatchMode::S2D))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairSet {
    pub pairs: Vec<SenseDefPair>,
    /// Headwords without a sense vector.
    pub skipped_entries: usize,
    /// Pairs dropped by the similarity floor.
    pub below_floor: usize,
}

/// Matches every entry of `lex` against its retained senses. Pairs with
/// similarity under `floor` are dropped when a floor is given.
pub fn build_training_pairs(
    lex: &Lexicon,
    senses: &SenseTable,
    vectors: &dyn WordVectors,
    stops: &StopwordSet,
    mode: MatchMode,
    floor: Option<f64>,
) -> PairSet {
    let mut out = PairSet {
        pairs: Vec::new(),
        skipped_entries: 0,
        below_floor: 0,
    };
    for entry in lex.entries() {
        let Ok(retained) = senses.senses(&entry.headword) else {
            out.skipped_entries += 1;
            continue;
        };
        let vecs: Vec<&[f64]> = retained.iter().map(|s| s.vector).collect();
        let mut scored = score(entry, &vecs, vectors, stops, mode);
        if let Some(f) = floor {
            let before = scored.len();
            scored.retain(|s| s.similarity >= f);
            out.below_floor += before - scored.len();
        }
        out.pairs.extend(to_pairs(entry, &vecs, scored));
    }
    if out.skipped_entries > 0 {
        log::warn!("{} headwords have no sense vector and were skipped", out.skipped_entries);
    }
    out
}

/// A pairs-file row; the sense vector is looked up again at training time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairRecord {
    pub headword: String,
    pub sense_index: usize,
    pub definition: Vec<String>,
}

impl From<&SenseDefPair> for PairRecord {
    fn from(p: &SenseDefPair) -> Self {
        Self {
            headword: p.headword.clone(),
            sense_index: p.sense_index,
            definition: p.definition.clone(),
        }
    }
}

pub fn pairs_to_tsv<'a>(pairs: impl IntoIterator<Item = &'a SenseDefPair>) -> String {
    let mut out = String::new();
    for p in pairs {
        let _ = writeln!(out, "{}\t{}\t{}", p.headword, p.sense_index, p.definition.join(" "));
    }
    out
}

pub fn parse_pairs_tsv(text: &str, origin: &Path) -> Result<Vec<PairRecord>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.splitn(3, '\t');
        let (Some(head), Some(k), Some(def)) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::parse(origin, i + 1, "expected headword<TAB>sense_index<TAB>definition"));
        };
        let sense_index = k
            .parse()
            .map_err(|_| Error::parse(origin, i + 1, format!("bad sense index {k:?}")))?;
        let definition: Vec<String> = def.split_whitespace().map(str::to_string).collect();
        if definition.is_empty() {
            return Err(Error::parse(origin, i + 1, "empty definition"));
        }
        out.push(PairRecord {
            headword: head.to_string(),
            sense_index,
            definition,
        });
    }
    Ok(out)
}

pub fn load_pairs(path: &Path) -> Result<Vec<PairRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_pairs_tsv(&text, path)
}

/// Attaches sense vectors to pairs-file rows.
pub fn resolve_pairs(records: &[PairRecord], senses: &SenseTable) -> Result<Vec<SenseDefPair>> {
    records
        .iter()
        .map(|r| {
            let retained = senses.senses(&r.headword)?;
            let sense = retained.get(r.sense_index).ok_or_else(|| {
                Error::Format(format!(
                    "{} has {} retained senses, pair refers to sense {}",
                    r.headword,
                    retained.len(),
                    r.sense_index
                ))
            })?;
            Ok(SenseDefPair {
                headword: r.headword.clone(),
                sense_index: r.sense_index,
                sense_vector: sense.vector.to_vec(),
                definition: r.definition.clone(),
            })
        })
        .collect()
}
