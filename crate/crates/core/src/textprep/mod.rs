//! Tokenization, vocabularies and stopword filtering.
//!
//! The same [`TokenizerProfile`] must be used for the embedding corpus and
//! for the lexicon, otherwise definition tokens will not line up with the
//! embedding vocabulary.

mod stopwords;
mod vocab;

pub use stopwords::{filter_stopwords, StopwordSet};
pub use vocab::{build_vocab, TokenCounts, Vocabulary, BOS, EOS, PAD, UNK};

use std::borrow::Cow;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PunctuationPolicy {
    /// Every punctuation character becomes its own token.
    #[default]
    SplitOff,
    Drop,
}

/// A single rewrite applied to raw text before splitting.
///
/// Rules run in order. A rule must be idempotent on its own output for the
/// tokenizer as a whole to stay idempotent.
#[derive(Debug, Clone)]
pub struct RewriteRule {
    pattern: Regex,
    replacement: String,
}

impl RewriteRule {
    pub fn new(pattern: &str, replacement: impl Into<String>) -> Result<Self> {
        let pattern = Regex::new(pattern)
            .map_err(|e| Error::Config(format!("bad rewrite pattern {pattern:?}: {e}")))?;
        Ok(Self {
            pattern,
            replacement: replacement.into(),
        })
    }

    pub fn pattern(&self) -> &str {
        self.pattern.as_str()
    }

    pub fn replacement(&self) -> &str {
        &self.replacement
    }
}

#[derive(Debug, Clone)]
pub struct TokenizerProfile {
    pub language_tag: String,
    pub lowercase: bool,
    pub punctuation_policy: PunctuationPolicy,
    pub extra_rules: Vec<RewriteRule>,
}

impl TokenizerProfile {
    /// Default profile for a language: lowercase, punctuation split off.
    pub fn for_language(language_tag: &str) -> Self {
        Self {
            language_tag: language_tag.to_string(),
            lowercase: true,
            punctuation_policy: PunctuationPolicy::SplitOff,
            extra_rules: Vec::new(),
        }
    }

    pub fn with_punctuation(mut self, policy: PunctuationPolicy) -> Self {
        self.punctuation_policy = policy;
        self
    }

    pub fn with_rule(mut self, rule: RewriteRule) -> Self {
        self.extra_rules.push(rule);
        self
    }
}

impl Default for TokenizerProfile {
    fn default() -> Self {
        Self::for_language("en")
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
        || matches!(c, '\u{0300}'..='\u{036F}' | '\u{200C}' | '\u{200D}')
        // Combining marks of Indic and Thai-like scripts, Japanese prolonged sound mark.
        || matches!(c, '\u{0900}'..='\u{0DFF}' | '\u{0E00}'..='\u{0E7F}' | '\u{30FC}')
}

pub fn tokenize(text: &str, profile: &TokenizerProfile) -> Vec<String> {
    let mut text = Cow::Borrowed(text);
    for rule in &profile.extra_rules {
        if let Cow::Owned(s) = rule.pattern.replace_all(&text, rule.replacement.as_str()) {
            text = Cow::Owned(s);
        }
    }
    if profile.lowercase {
        text = Cow::Owned(text.to_lowercase());
    }

    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        let mut word = String::new();
        for c in chunk.chars() {
            if is_word_char(c) {
                word.push(c);
                continue;
            }
            if !word.is_empty() {
                tokens.push(std::mem::take(&mut word));
            }
            if profile.punctuation_policy == PunctuationPolicy::SplitOff {
                tokens.push(c.to_string());
            }
        }
        if !word.is_empty() {
            tokens.push(word);
        }
    }
    tokens
}
