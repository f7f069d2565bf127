//! Single-sense and multi-sense word embeddings.
//!
//! [`train_sgns`] learns one vector per word with skip-gram and negative
//! sampling. [`train_adagram`] learns up to `max_prototypes` sense vectors
//! per word under a stick-breaking prior, so words seen in a single kind of
//! context keep one sense while ambiguous words grow several.

mod adagram;
mod corpus;
mod sgns;
mod shared;

pub use adagram::{train_adagram, AdagramConfig};
pub use sgns::{train_sgns, SgnsConfig};

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Shape(format!("cosine of {} and {} dims", u.len(), v.len())));
    }
    let (mut dot, mut nu, mut nv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::UndefinedSimilarity);
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

/// Anything that maps a word to one vector.
pub trait WordVectors {
    fn dim(&self) -> usize;
    fn vector(&self, word: &str) -> Option<&[f64]>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    words: Vec<String>,
    data: Vec<f64>,
    index: HashMap<String, usize>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            words: Vec::new(),
            data: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn from_rows(dim: usize, words: Vec<String>, data: Vec<f64>) -> Result<Self> {
        if data.len() != words.len() * dim {
            return Err(Error::Shape(format!(
                "{} words x {dim} dims but {} values",
                words.len(),
                data.len()
            )));
        }
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Ok(Self {
            dim,
            words,
            data,
            index,
        })
    }

    pub fn insert(&mut self, word: &str, vector: &[f64]) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::Shape(format!("vector of {} dims, table has {}", vector.len(), self.dim)));
        }
        match self.index.get(word) {
            Some(&i) => self.data[i * self.dim..(i + 1) * self.dim].copy_from_slice(vector),
            None => {
                self.index.insert(word.to_string(), self.words.len());
                self.words.push(word.to_string());
                self.data.extend_from_slice(vector);
            }
        }
        Ok(())
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index
            .get(word)
            .map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> + '_ {
        self.words
            .iter()
            .zip(self.data.chunks_exact(self.dim.max(1)))
            .map(|(w, v)| (w.as_str(), v))
    }

    /// `<vocab_size> <dim>` header, then `word v1 ... vdim` lines.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.len(), self.dim);
        for (w, v) in self.iter() {
            out.push_str(w);
            for x in v {
                let _ = write!(out, " {x}");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_text(text: &str, origin: &Path) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::parse(origin, 1, "missing header"))?;
        let mut parts = header.split_whitespace();
        let (n, dim) = match (parts.next(), parts.next(), parts.next()) {
            (Some(n), Some(d), None) => (
                n.parse::<usize>().map_err(|_| Error::parse(origin, 1, "bad vocab size"))?,
                d.parse::<usize>().map_err(|_| Error::parse(origin, 1, "bad dim"))?,
            ),
            _ => return Err(Error::parse(origin, 1, "expected `<vocab_size> <dim>`")),
        };
        let mut table = EmbeddingTable::new(dim);
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split(' ');
            let word = fields.next().unwrap_or_default();
            let vector = fields
                .map(str::parse::<f64>)
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::parse(origin, lineno, format!("bad value: {e}")))?;
            if vector.len() != dim || vector.iter().any(|x| !x.is_finite()) {
                return Err(Error::parse(origin, lineno, format!("expected {dim} finite values")));
            }
            table.insert(word, &vector)?;
        }
        if table.len() != n {
            return Err(Error::Format(format!(
                "{}: header says {n} words, found {}",
                origin.display(),
                table.len()
            )));
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_text(&text, path)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

impl WordVectors for EmbeddingTable {
    fn dim(&self) -> usize {
        self.dim
    }

    fn vector(&self, word: &str) -> Option<&[f64]> {
        self.get(word)
    }
}

/// One retained sense of a word.
#[derive(Debug, Clone, Copy)]
pub struct Sense<'a> {
    /// Index of the underlying prototype (0..max_prototypes).
    pub prototype: usize,
    pub prior: f64,
    pub vector: &'a [f64],
}

pub const DEFAULT_PRUNE_THRESHOLD: f64 = 1e-3;

/// Per-word sense prototypes with prior probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct SenseTable {
    dim: usize,
    max_prototypes: usize,
    pub prune_threshold: f64,
    words: Vec<String>,
    index: HashMap<String, usize>,
    /// words.len() * max_prototypes
    priors: Vec<f64>,
    /// words.len() * max_prototypes * dim
    vectors: Vec<f64>,
}

impl SenseTable {
    pub fn new(dim: usize, max_prototypes: usize, prune_threshold: f64) -> Self {
        Self {
            dim,
            max_prototypes,
            prune_threshold,
            words: Vec::new(),
            index: HashMap::new(),
            priors: Vec::new(),
            vectors: Vec::new(),
        }
    }

    /// Adds a word with one `(vector, prior)` per prototype. Missing
    /// prototypes are filled with zero prior and zero vectors.
    pub fn insert(&mut self, word: &str, prototypes: &[(Vec<f64>, f64)]) -> Result<()> {
        if prototypes.is_empty() || prototypes.len() > self.max_prototypes {
            return Err(Error::Shape(format!(
                "{word}: {} prototypes, table allows 1..={}",
                prototypes.len(),
                self.max_prototypes
            )));
        }
        let total: f64 = prototypes.iter().map(|p| p.1).sum();
        if prototypes.iter().any(|p| p.1 < 0.0) || (total - 1.0).abs() > 1e-6 {
            return Err(Error::Config(format!("{word}: priors must be nonnegative and sum to 1")));
        }
        if prototypes.iter().any(|p| p.0.len() != self.dim) {
            return Err(Error::Shape(format!("{word}: sense vector dim differs from {}", self.dim)));
        }
        if self.index.contains_key(word) {
            return Err(Error::Config(format!("duplicate word {word}")));
        }
        self.index.insert(word.to_string(), self.words.len());
        self.words.push(word.to_string());
        for k in 0..self.max_prototypes {
            match prototypes.get(k) {
                Some((v, p)) => {
                    self.priors.push(*p);
                    self.vectors.extend_from_slice(v);
                }
                None => {
                    self.priors.push(0.0);
                    self.vectors.extend(std::iter::repeat(0.0).take(self.dim));
                }
            }
        }
        Ok(())
    }

    pub(crate) fn from_parts(
        dim: usize,
        max_prototypes: usize,
        prune_threshold: f64,
        words: Vec<String>,
        priors: Vec<f64>,
        vectors: Vec<f64>,
    ) -> Self {
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Self {
            dim,
            max_prototypes,
            prune_threshold,
            words,
            index,
            priors,
            vectors,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_prototypes(&self) -> usize {
        self.max_prototypes
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    fn prototype(&self, w: usize, k: usize) -> Sense<'_> {
        let row = w * self.max_prototypes + k;
        Sense {
            prototype: k,
            prior: self.priors[row],
            vector: &self.vectors[row * self.dim..(row + 1) * self.dim],
        }
    }

    /// Every prototype of `word`, retained or not.
    pub fn prototypes(&self, word: &str) -> Result<Vec<Sense<'_>>> {
        let w = *self
            .index
            .get(word)
            .ok_or_else(|| Error::MissingWord(word.to_string()))?;
        Ok((0..self.max_prototypes).map(|k| self.prototype(w, k)).collect())
    }

    fn argmax_prototype(&self, w: usize) -> usize {
        let priors = &self.priors[w * self.max_prototypes..(w + 1) * self.max_prototypes];
        let mut best = 0;
        for (k, &p) in priors.iter().enumerate() {
            if p > priors[best] {
                best = k;
            }
        }
        best
    }

    /// Prototypes with prior >= prune_threshold, in prototype order. The most
    /// probable prototype is always included.
    pub fn senses(&self, word: &str) -> Result<Vec<Sense<'_>>> {
        let w = *self
            .index
            .get(word)
            .ok_or_else(|| Error::MissingWord(word.to_string()))?;
        let best = self.argmax_prototype(w);
        Ok((0..self.max_prototypes)
            .map(|k| self.prototype(w, k))
            .filter(|s| s.prior >= self.prune_threshold || s.prototype == best)
            .collect())
    }

    /// Vector of the most probable prototype (lowest index on ties).
    pub fn word_vector(&self, word: &str) -> Result<&[f64]> {
        let w = *self
            .index
            .get(word)
            .ok_or_else(|| Error::MissingWord(word.to_string()))?;
        Ok(self.prototype(w, self.argmax_prototype(w)).vector)
    }

    /// Header `#senses v1 <dim> <max_prototypes>`, then one
    /// `word<TAB>k<TAB>prior<TAB>v1 ... vdim` line per prototype.
    pub fn to_text(&self) -> String {
        let mut out = format!("#senses v1 {} {}\n", self.dim, self.max_prototypes);
        for (w, word) in self.words.iter().enumerate() {
            for k in 0..self.max_prototypes {
                let s = self.prototype(w, k);
                let _ = write!(out, "{word}\t{k}\t{}\t", s.prior);
                for (i, x) in s.vector.iter().enumerate() {
                    if i > 0 {
                        out.push(' ');
                    }
                    let _ = write!(out, "{x}");
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn parse_text(text: &str, origin: &Path, prune_threshold: f64) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        let fields: Vec<&str> = header.split_whitespace().collect();
        let (dim, max_prototypes) = match fields.as_slice() {
            ["#senses", "v1", d, t] => (
                d.parse::<usize>().map_err(|_| Error::parse(origin, 1, "bad dim"))?,
                t.parse::<usize>().map_err(|_| Error::parse(origin, 1, "bad max_prototypes"))?,
            ),
            _ => return Err(Error::parse(origin, 1, "expected `#senses v1 <dim> <max_prototypes>`")),
        };
        let mut table = SenseTable::new(dim, max_prototypes, prune_threshold);
        let mut pending: Option<(String, Vec<(Vec<f64>, f64)>)> = None;
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split('\t').collect();
            if parts.len() != 4 {
                return Err(Error::parse(origin, lineno, "expected word<TAB>k<TAB>prior<TAB>vector"));
            }
            let k: usize = parts[1].parse().map_err(|_| Error::parse(origin, lineno, "bad k"))?;
            let prior: f64 = parts[2].parse().map_err(|_| Error::parse(origin, lineno, "bad prior"))?;
            let vector = parts[3]
                .split(' ')
                .map(str::parse::<f64>)
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::parse(origin, lineno, format!("bad value: {e}")))?;
            if vector.len() != dim {
                return Err(Error::parse(origin, lineno, format!("expected {dim} values")));
            }
            match &mut pending {
                Some((w, protos)) if w == parts[0] => {
                    if k != protos.len() {
                        return Err(Error::parse(origin, lineno, "prototype indices must be consecutive"));
                    }
                    protos.push((vector, prior));
                }
                _ => {
                    if let Some((w, protos)) = pending.take() {
                        table.insert(&w, &protos)?;
                    }
                    if k != 0 {
                        return Err(Error::parse(origin, lineno, "first prototype must be 0"));
                    }
                    pending = Some((parts[0].to_string(), vec![(vector, prior)]));
                }
            }
        }
        if let Some((w, protos)) = pending {
            table.insert(&w, &protos)?;
        }
        Ok(table)
    }

    pub fn load(path: &Path, prune_threshold: f64) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_text(&text, path, prune_threshold)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

pub fn word_vector<'a>(word: &str, senses: &'a SenseTable) -> Result<&'a [f64]> {
    senses.word_vector(word)
}

/// Most-frequent-sense vectors stand in for word vectors.
impl WordVectors for SenseTable {
    fn dim(&self) -> usize {
        self.dim
    }

    fn vector(&self, word: &str) -> Option<&[f64]> {
        self.word_vector(word).ok()
    }
}

/// Top-`k` words of `table` by cosine to `query`, skipping `exclude`.
pub fn nearest_words<'a>(
    table: &'a impl NeighborSource,
    query: &[f64],
    k: usize,
    exclude: &str,
) -> Vec<(&'a str, f64)> {
    let mut scored: Vec<(&str, f64)> = table
        .candidates()
        .filter(|(w, _)| *w != exclude)
        .filter_map(|(w, v)| cosine(query, v).ok().map(|c| (w, c)))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    scored.truncate(k);
    scored
}

/// Word/vector pairs to search over in [`nearest_words`].
pub trait NeighborSource {
    fn candidates(&self) -> Box<dyn Iterator<Item = (&str, &[f64])> + '_>;
}

impl NeighborSource for EmbeddingTable {
    fn candidates(&self) -> Box<dyn Iterator<Item = (&str, &[f64])> + '_> {
        Box::new(self.iter())
    }
}

impl NeighborSource for SenseTable {
    fn candidates(&self) -> Box<dyn Iterator<Item = (&str, &[f64])> + '_> {
        Box::new(
            self.words
                .iter()
                .enumerate()
                .map(|(w, word)| (word.as_str(), self.prototype(w, self.argmax_prototype(w)).vector)),
        )
    }
}
