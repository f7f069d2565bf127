use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct StopwordSet {
    pub language_tag: String,
    tokens: HashSet<String>,
}

impl StopwordSet {
    pub fn new<I, S>(language_tag: &str, tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            language_tag: language_tag.to_string(),
            tokens: tokens.into_iter().map(Into::into).collect(),
        }
    }

    pub fn empty(language_tag: &str) -> Self {
        Self::new(language_tag, Vec::<String>::new())
    }

    /// Parses one token per line; blank lines and `#` comments are skipped.
    pub fn parse(language_tag: &str, text: &str) -> Self {
        Self::new(
            language_tag,
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_string),
        )
    }

    pub fn load(language_tag: &str, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(language_tag, &text))
    }

    /// Shipped default list, or `None` for an unsupported language.
    pub fn builtin(language_tag: &str) -> Option<Self> {
        let text = match language_tag {
            "en" => include_str!("../../stopwords/en.txt"),
            "nl" => include_str!("../../stopwords/nl.txt"),
            "de" => include_str!("../../stopwords/de.txt"),
            "fr" => include_str!("../../stopwords/fr.txt"),
            "es" => include_str!("../../stopwords/es.txt"),
            "it" => include_str!("../../stopwords/it.txt"),
            _ => return None,
        };
        Some(Self::parse(language_tag, text))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.tokens.contains(token)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

pub fn filter_stopwords<S: AsRef<str> + Clone>(tokens: &[S], stops: &StopwordSet) -> Vec<S> {
    tokens
        .iter()
        .filter(|t| !stops.contains(t.as_ref()))
        .cloned()
        .collect()
}
