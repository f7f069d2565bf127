use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const UNK: &str = "<unk>";
pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const PAD: &str = "<pad>";

const SPECIALS: [&str; 4] = [UNK, BOS, EOS, PAD];
const HEADER: &str = "#vocab v1";

/// Token frequency counts. Shards can be counted independently and merged.
#[derive(Debug, Clone, Default)]
pub struct TokenCounts(HashMap<String, u64>);

impl TokenCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add<S: AsRef<str>>(&mut self, token: S) {
        let token = token.as_ref();
        if SPECIALS.contains(&token) {
            return;
        }
        *self.0.entry(token.to_string()).or_default() += 1;
    }

    pub fn extend<I, S>(&mut self, tokens: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        for t in tokens {
            self.add(t);
        }
    }

    pub fn merge(&mut self, other: TokenCounts) {
        for (tok, n) in other.0 {
            *self.0.entry(tok).or_default() += n;
        }
    }
}

/// Token/id table. Ids 0..4 are the special tokens, the rest are sorted by
/// descending count with lexicographic tie-break.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
    min_count: u64,
}

impl Vocabulary {
    pub const UNK_ID: usize = 0;
    pub const BOS_ID: usize = 1;
    pub const EOS_ID: usize = 2;
    pub const PAD_ID: usize = 3;

    pub fn from_counts(counts: TokenCounts, min_count: u64, max_size: Option<usize>) -> Self {
        let mut kept: Vec<(String, u64)> = counts
            .0
            .into_iter()
            .filter(|(_, n)| *n >= min_count)
            .collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        if let Some(max) = max_size {
            kept.truncate(max);
        }
        let specials = SPECIALS.iter().map(|s| (s.to_string(), 0));
        Self::from_entries(specials.chain(kept), min_count)
    }

    fn from_entries(entries: impl IntoIterator<Item = (String, u64)>, min_count: u64) -> Self {
        let (tokens, counts): (Vec<_>, Vec<_>) = entries.into_iter().unzip();
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self {
            tokens,
            counts,
            index,
            min_count,
        }
    }

    /// Number of entries including the four specials.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    /// True when only the specials are present.
    pub fn is_empty(&self) -> bool {
        self.tokens.len() == SPECIALS.len()
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    /// Id of `token`, or `UNK_ID` when absent.
    pub fn id(&self, token: &str) -> usize {
        self.get(token).unwrap_or(Self::UNK_ID)
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn count(&self, id: usize) -> u64 {
        self.counts.get(id).copied().unwrap_or(0)
    }

    pub fn is_special(id: usize) -> bool {
        id < SPECIALS.len()
    }

    /// Non-special `(id, token, count)` triples in id order.
    pub fn words(&self) -> impl Iterator<Item = (usize, &str, u64)> + '_ {
        self.tokens
            .iter()
            .zip(&self.counts)
            .enumerate()
            .skip(SPECIALS.len())
            .map(|(i, (t, &c))| (i, t.as_str(), c))
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t.as_ref())).collect()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        out.push_str(HEADER);
        out.push('\n');
        for (i, (t, c)) in self.tokens.iter().zip(&self.counts).enumerate() {
            let _ = writeln!(out, "{t}\t{i}\t{c}");
        }
        out
    }

    /// Hex SHA-256 of the canonical TSV serialization.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_tsv().as_bytes()))
    }

    pub fn parse_tsv(text: &str, origin: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim_end() == HEADER => {}
            _ => return Err(Error::parse(origin, 1, format!("expected header {HEADER:?}"))),
        }
        let mut entries = Vec::new();
        for (lineno, line) in lines {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::parse(origin, lineno + 1, "expected token<TAB>id<TAB>count"));
            }
            let id: usize = fields[1]
                .parse()
                .map_err(|_| Error::parse(origin, lineno + 1, "bad id"))?;
            let count: u64 = fields[2]
                .parse()
                .map_err(|_| Error::parse(origin, lineno + 1, "bad count"))?;
            if id != entries.len() {
                return Err(Error::parse(origin, lineno + 1, "ids must be contiguous from 0"));
            }
            if id < SPECIALS.len() && fields[0] != SPECIALS[id] {
                return Err(Error::parse(origin, lineno + 1, "reserved id holds a non-special token"));
            }
            entries.push((fields[0].to_string(), count));
        }
        if entries.len() < SPECIALS.len() {
            return Err(Error::Format(format!("{}: missing special tokens", origin.display())));
        }
        let min_count = entries[SPECIALS.len()..]
            .iter()
            .map(|e| e.1)
            .min()
            .unwrap_or(1)
            .max(1);
        Ok(Self::from_entries(entries, min_count))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_tsv(&text, path)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }
}

pub fn build_vocab<I, S>(tokens: I, min_count: u64, max_size: Option<usize>) -> Result<Vocabulary>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    if min_count == 0 {
        return Err(Error::Config("min_count must be at least 1".into()));
    }
    let mut counts = TokenCounts::new();
    counts.extend(tokens);
    Ok(Vocabulary::from_counts(counts, min_count, max_size))
}
