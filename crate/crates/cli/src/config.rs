use std::path::Path;

use polydef::defgen::{DefModelConfig, SamplingConfig};
use polydef::embeddings::{AdagramConfig, SgnsConfig, DEFAULT_PRUNE_THRESHOLD};
use polydef::lexicon::DEFAULT_MAX_DEF_LEN;
use polydef::metrics::BleuConfig;
use polydef::textprep::{PunctuationPolicy, StopwordSet, TokenizerProfile};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Every stage's settings in one place. Loaded from a JSON file, then
/// overridden by flags; the resolved value is echoed into every manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Copied into every module seed during resolution.
    pub seed: u64,
    pub threads: usize,
    /// Forces single-threaded training for bit-identical reruns.
    pub deterministic: bool,
    pub language: String,
    pub punctuation: PunctuationPolicy,
    pub max_def_len: usize,
    pub split_ratios: [f64; 3],
    /// Senses whose prior falls below this are dropped.
    pub prune_threshold: f64,
    /// Matched pairs with lower cosine are discarded.
    pub similarity_floor: Option<f64>,
    /// Definition tokens rarer than this map to the unknown token.
    pub vocab_min_count: u64,
    pub sgns: SgnsConfig,
    pub adagram: AdagramConfig,
    pub model: DefModelConfig,
    pub sampling: SamplingConfig,
    pub bleu: BleuConfig,
    pub eval_runs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            threads: 1,
            deterministic: false,
            language: "en".into(),
            punctuation: PunctuationPolicy::SplitOff,
            max_def_len: DEFAULT_MAX_DEF_LEN,
            split_ratios: [0.8, 0.1, 0.1],
            prune_threshold: DEFAULT_PRUNE_THRESHOLD,
            similarity_floor: None,
            vocab_min_count: 1,
            sgns: SgnsConfig::default(),
            adagram: AdagramConfig::default(),
            model: DefModelConfig::default(),
            sampling: SamplingConfig::default(),
            bleu: BleuConfig::default(),
            eval_runs: 10,
        }
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub deterministic: bool,
}

impl RunConfig {
    pub fn load(path: Option<&Path>, overrides: Overrides) -> Result<Self, CliError> {
        let mut cfg = match path {
            Some(p) => {
                let text = crate::read_input(p)?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", p.display())))?
            }
            None => RunConfig::default(),
        };
        if let Some(s) = overrides.seed {
            cfg.seed = s;
        }
        if let Some(t) = overrides.threads {
            cfg.threads = t;
        }
        cfg.deterministic |= overrides.deterministic;
        cfg.resolve()?;
        Ok(cfg)
    }

    fn resolve(&mut self) -> Result<(), CliError> {
        if self.deterministic {
            self.threads = 1;
        }
        if self.threads == 0 {
            return Err(CliError::Usage("threads must be at least 1".into()));
        }
        self.sgns.seed = self.seed;
        self.adagram.seed = self.seed;
        self.model.seed = self.seed;
        self.sgns.threads = self.threads;
        self.adagram.threads = self.threads;
        self.adagram.prune_threshold = self.prune_threshold;
        if self.max_def_len == 0 || self.eval_runs == 0 || self.vocab_min_count == 0 {
            return Err(CliError::Usage(
                "max_def_len, eval_runs and vocab_min_count must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.prune_threshold) {
            return Err(CliError::Usage("prune_threshold must lie in [0, 1)".into()));
        }
        self.model.max_def_len = self.max_def_len;
        self.sgns.validate()?;
        self.adagram.validate()?;
        if !(self.sampling.temperature > 0.0) || self.sampling.max_len == 0 {
            return Err(CliError::Usage("sampling needs a positive temperature and max_len".into()));
        }
        Ok(())
    }

    pub fn profile(&self) -> TokenizerProfile {
        TokenizerProfile::for_language(&self.language).with_punctuation(self.punctuation)
    }

    pub fn stopwords(&self, file: Option<&Path>) -> Result<StopwordSet, CliError> {
        if let Some(p) = file {
            crate::require(p)?;
            return Ok(StopwordSet::load(&self.language, p)?);
        }
        Ok(StopwordSet::builtin(&self.language).unwrap_or_else(|| {
            log::warn!("no built-in stopword list for {:?}; definitions keep every token", self.language);
            StopwordSet::empty(&self.language)
        }))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}
