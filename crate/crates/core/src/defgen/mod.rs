//! Conditioned definition language model.
//!
//! At every step the LSTM reads the previous token's embedding together
//! with a fixed conditioning vector: `tanh(W [condition ⊕ charcnn(word)] + b)`.
//! The base model conditions on one word vector, the multi-sense model on
//! one sense vector per training pair.

mod checkpoint;
mod train;

pub use checkpoint::{load_checkpoint, read_checkpoint, read_header, save_checkpoint, write_checkpoint, CheckpointHeader};
pub use train::{corpus_nll, examples_from_lexicon, train_defmodel, TrainReport, TrainingExample};

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embeddings::{SenseTable, WordVectors};
use crate::error::{Error, Result};
use crate::metrics::DefinitionSource;
use crate::neural::{softmax, CharCnn, Gradients, Graph, Linear, Lstm, LstmState, ParamId, ParamStore, Tensor, Var, DEFAULT_CHAR_FILTERS, INIT_BOUND};
use crate::textprep::Vocabulary;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DefModelConfig {
    pub condition_dim: usize,
    pub hidden: usize,
    pub layers: usize,
    pub char_embedding_dim: usize,
    /// (kernel width, filter count) pairs
    pub char_filters: Vec<(usize, usize)>,
    pub char_feature_dim: usize,
    pub condition_projection_dim: usize,
    pub token_embedding_dim: usize,
    pub max_def_len: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub clip_norm: f64,
    /// Never sample the unknown-word token.
    pub mask_unk: bool,
    pub seed: u64,
}

impl Default for DefModelConfig {
    fn default() -> Self {
        Self {
            condition_dim: 300,
            hidden: 300,
            layers: 2,
            char_embedding_dim: 20,
            char_filters: DEFAULT_CHAR_FILTERS.to_vec(),
            char_feature_dim: 160,
            condition_projection_dim: 300,
            token_embedding_dim: 300,
            max_def_len: 60,
            lr: 0.001,
            batch_size: 32,
            max_epochs: 50,
            patience: 5,
            clip_norm: 5.0,
            mask_unk: true,
            seed: 1,
        }
    }
}

impl DefModelConfig {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("condition_dim", self.condition_dim),
            ("hidden", self.hidden),
            ("layers", self.layers),
            ("char_embedding_dim", self.char_embedding_dim),
            ("condition_projection_dim", self.condition_projection_dim),
            ("token_embedding_dim", self.token_embedding_dim),
            ("max_def_len", self.max_def_len),
            ("batch_size", self.batch_size),
            ("max_epochs", self.max_epochs),
            ("patience", self.patience),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        if self.char_filters.is_empty() || self.char_filters.iter().any(|&(k, n)| k == 0 || n == 0) {
            return Err(Error::Config("char_filters need positive widths and counts".into()));
        }
        let total: usize = self.char_filters.iter().map(|&(_, n)| n).sum();
        if total != self.char_feature_dim {
            return Err(Error::Config(format!(
                "char_feature_dim is {} but the filters produce {total}",
                self.char_feature_dim
            )));
        }
        let mut widths: Vec<usize> = self.char_filters.iter().map(|&(k, _)| k).collect();
        widths.sort_unstable();
        widths.dedup();
        if widths.len() != self.char_filters.len() {
            return Err(Error::Config("char_filters repeat a kernel width".into()));
        }
        if !(self.lr > 0.0) || !(self.clip_norm > 0.0) {
            return Err(Error::Config("lr and clip_norm must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Layout {
    token_embedding: ParamId,
    cnn: CharCnn,
    condition: Linear,
    lstm: Lstm,
    output: Linear,
}

impl Layout {
    fn lookup(store: &ParamStore, cfg: &DefModelConfig) -> Result<Self> {
        Ok(Self {
            token_embedding: crate::neural::param(store, "token_embedding")?,
            cnn: CharCnn::lookup(store, "char_cnn", &cfg.char_filters)?,
            condition: Linear::lookup(store, "condition_projection")?,
            lstm: Lstm::lookup(store, "lstm", cfg.layers)?,
            output: Linear::lookup(store, "output")?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct DefModel {
    pub config: DefModelConfig,
    pub vocab: Vocabulary,
    pub char_vocab: Vocabulary,
    pub params: ParamStore,
    layout: Layout,
}

/// Fresh model with weights in U(-0.05, 0.05), zero biases and forget-gate
/// bias 1, drawn from `cfg.seed`.
pub fn init_model(cfg: &DefModelConfig, vocab: Vocabulary, char_vocab: Vocabulary) -> Result<DefModel> {
    cfg.validate()?;
    if vocab.is_empty() {
        return Err(Error::Config("token vocabulary has no words".into()));
    }
    if char_vocab.is_empty() {
        return Err(Error::Config("character vocabulary has no characters".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut store = ParamStore::new();
    let v = vocab.len();
    let token_embedding = store.add(
        "token_embedding",
        Tensor::uniform(&[v, cfg.token_embedding_dim], INIT_BOUND, &mut rng),
    );
    let cnn = CharCnn::new(
        &mut store,
        "char_cnn",
        char_vocab.len(),
        cfg.char_embedding_dim,
        &cfg.char_filters,
        &mut rng,
    );
    let condition = Linear::new(
        &mut store,
        "condition_projection",
        cfg.condition_projection_dim,
        cfg.condition_dim + cfg.char_feature_dim,
        &mut rng,
    );
    let lstm = Lstm::new(
        &mut store,
        "lstm",
        cfg.token_embedding_dim + cfg.condition_projection_dim,
        cfg.hidden,
        cfg.layers,
        &mut rng,
    );
    let output = Linear::new(&mut store, "output", v, cfg.hidden, &mut rng);
    Ok(DefModel {
        config: cfg.clone(),
        vocab,
        char_vocab,
        params: store,
        layout: Layout {
            token_embedding,
            cnn,
            condition,
            lstm,
            output,
        },
    })
}

impl DefModel {
    /// Rebuilds a model around loaded parameters, checking every shape
    /// against a freshly initialized model of the same configuration.
    pub fn from_params(config: DefModelConfig, vocab: Vocabulary, char_vocab: Vocabulary, params: ParamStore) -> Result<Self> {
        let reference = init_model(&config, vocab, char_vocab)?;
        if reference.params.len() != params.len() {
            return Err(Error::Format(format!(
                "expected {} tensors, found {}",
                reference.params.len(),
                params.len()
            )));
        }
        for (name, t) in reference.params.iter() {
            let found = params
                .id(name)
                .map(|id| params.get(id))
                .ok_or_else(|| Error::Format(format!("missing tensor {name}")))?;
            if found.shape != t.shape {
                return Err(Error::Format(format!(
                    "tensor {name} has shape {:?}, expected {:?}",
                    found.shape, t.shape
                )));
            }
        }
        let layout = Layout::lookup(&params, &config)?;
        Ok(Self {
            config,
            vocab: reference.vocab,
            char_vocab: reference.char_vocab,
            params,
            layout,
        })
    }

    /// Token ids of a definition, truncated to `max_def_len`.
    pub fn encode(&self, definition: &[String]) -> Vec<usize> {
        definition
            .iter()
            .take(self.config.max_def_len)
            .map(|t| self.vocab.id(t))
            .collect()
    }

    fn conditioning(&self, g: &mut Graph, condition: &[f64], word: &str) -> Result<Var> {
        if condition.len() != self.config.condition_dim {
            return Err(Error::Shape(format!(
                "condition vector has {} dims, model expects {}",
                condition.len(),
                self.config.condition_dim
            )));
        }
        let c = g.input(condition);
        let ids = self.layout.cnn.char_ids(word, &self.char_vocab);
        let chars = self.layout.cnn.forward(g, &ids)?;
        let both = g.concat(&[c, chars]);
        let projected = self.layout.condition.forward(g, both)?;
        Ok(g.tanh(projected))
    }

    fn step(&self, g: &mut Graph, prev: usize, cond: Var, state: &LstmState) -> Result<(Var, LstmState)> {
        let emb = g.row(self.layout.token_embedding, prev);
        let x = g.concat(&[emb, cond]);
        let next = self.layout.lstm.step(g, x, state)?;
        let logits = self.layout.output.forward(g, next.top())?;
        Ok((logits, next))
    }

    /// Builds the teacher-forced graph and returns (summed NLL, token count).
    /// Targets are the definition ids followed by EOS.
    pub(crate) fn sequence_graph(&self, g: &mut Graph, condition: &[f64], word: &str, ids: &[usize]) -> Result<(Var, usize)> {
        if ids.is_empty() {
            return Err(Error::Config(format!("empty definition for {word:?}")));
        }
        let cond = self.conditioning(g, condition, word)?;
        let mut state = self.layout.lstm.zero_state(g);
        let mut prev = Vocabulary::BOS_ID;
        let mut losses = Vec::with_capacity(ids.len() + 1);
        for &target in ids.iter().chain(std::iter::once(&Vocabulary::EOS_ID)) {
            let (logits, next) = self.step(g, prev, cond, &state)?;
            losses.push(g.softmax_xent(logits, target)?);
            state = next;
            prev = target;
        }
        let total = g.sum(&losses)?;
        Ok((total, losses.len()))
    }

    /// Mean per-token negative log-likelihood of `definition` (plus EOS).
    pub fn sequence_nll(&self, condition: &[f64], word: &str, definition: &[String]) -> Result<f64> {
        let mut g = Graph::new(&self.params);
        let (loss, n) = self.sequence_graph(&mut g, condition, word, &self.encode(definition))?;
        Ok(g.value(loss)[0] / n as f64)
    }

    /// Mean per-token NLL and its gradient with respect to every parameter.
    pub fn loss_and_gradients(&self, condition: &[f64], word: &str, definition: &[String]) -> Result<(f64, Gradients)> {
        let mut g = Graph::new(&self.params);
        let (loss, n) = self.sequence_graph(&mut g, condition, word, &self.encode(definition))?;
        let mut grads = Gradients::zeros_like(&self.params);
        g.backward(loss, 1.0 / n as f64, &mut grads);
        Ok((g.value(loss)[0] / n as f64, grads))
    }

    /// Teacher-forced next-token distributions: one per definition token and
    /// one for EOS.
    pub fn step_distributions(&self, condition: &[f64], word: &str, definition: &[String]) -> Result<Vec<Vec<f64>>> {
        let mut g = Graph::new(&self.params);
        let cond = self.conditioning(&mut g, condition, word)?;
        let mut state = self.layout.lstm.zero_state(&mut g);
        let mut prev = Vocabulary::BOS_ID;
        let mut out = Vec::new();
        let ids = self.encode(definition);
        for i in 0..=ids.len() {
            let (logits, next) = self.step(&mut g, prev, cond, &state)?;
            out.push(softmax(g.value(logits), 1.0)?);
            state = next;
            if i < ids.len() {
                prev = ids[i];
            }
        }
        Ok(out)
    }

    /// Autoregressive sampling from softmax(logits / temperature), stopping
    /// at EOS or after `max_len` tokens. BOS and PAD are never emitted, UNK
    /// only when `mask_unk` is off.
    pub fn sample_definition(
        &self,
        condition: &[f64],
        word: &str,
        temperature: f64,
        max_len: usize,
        rng: &mut impl Rng,
    ) -> Result<Vec<String>> {
        if !(temperature > 0.0) {
            return Err(Error::Config(format!("temperature must be positive, got {temperature}")));
        }
        let mut g = Graph::new(&self.params);
        let cond = self.conditioning(&mut g, condition, word)?;
        let mut state = self.layout.lstm.zero_state(&mut g);
        let mut prev = Vocabulary::BOS_ID;
        let mut out = Vec::new();
        while out.len() < max_len {
            let (logits, next) = self.step(&mut g, prev, cond, &state)?;
            let mut l = g.value(logits).to_vec();
            l[Vocabulary::BOS_ID] = f64::NEG_INFINITY;
            l[Vocabulary::PAD_ID] = f64::NEG_INFINITY;
            if self.config.mask_unk {
                l[Vocabulary::UNK_ID] = f64::NEG_INFINITY;
            }
            let p = softmax(&l, temperature)?;
            let id = draw(&p, rng);
            if id == Vocabulary::EOS_ID {
                break;
            }
            out.push(self.vocab.token(id).unwrap_or(crate::textprep::UNK).to_string());
            state = next;
            prev = id;
        }
        Ok(out)
    }

    pub fn num_parameters(&self) -> usize {
        self.params.num_values()
    }
}

fn draw(p: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &x) in p.iter().enumerate() {
        if x > 0.0 {
            acc += x;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingConfig {
    pub temperature: f64,
    pub max_len: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            temperature: 0.1,
            max_len: 60,
        }
    }
}

/// Where condition vectors come from at generation time.
#[derive(Clone, Copy)]
pub enum Conditioning<'a> {
    /// One definition per retained sense.
    Senses(&'a SenseTable),
    /// One definition from the word vector.
    Words(&'a (dyn WordVectors + Sync)),
}

/// The rng for word `word_index` of a run seeded with `seed`.
pub fn word_rng(seed: u64, word_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(word_index as u64);
    rng
}

/// (sense_index, definition) for every retained sense of `word`, or a single
/// (0, definition) under word conditioning.
pub fn generate_for_word(
    model: &DefModel,
    word: &str,
    conditioning: Conditioning,
    sampling: &SamplingConfig,
    rng: &mut impl Rng,
) -> Result<Vec<(usize, Vec<String>)>> {
    match conditioning {
        Conditioning::Senses(table) => table
            .senses(word)?
            .iter()
            .enumerate()
            .map(|(i, s)| {
                Ok((
                    i,
                    model.sample_definition(s.vector, word, sampling.temperature, sampling.max_len, rng)?,
                ))
            })
            .collect(),
        Conditioning::Words(vectors) => {
            let v = vectors
                .vector(word)
                .ok_or_else(|| Error::MissingWord(word.to_string()))?;
            Ok(vec![(
                0,
                model.sample_definition(v, word, sampling.temperature, sampling.max_len, rng)?,
            )])
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedDefinition {
    pub headword: String,
    pub sense_index: usize,
    pub definition: Vec<String>,
}

/// Generates for every word, each on its own rng stream, spread over
/// `threads` workers. Words without a representation are skipped; their
/// count is returned alongside.
pub fn generate_all(
    model: &DefModel,
    words: &[String],
    conditioning: Conditioning,
    sampling: &SamplingConfig,
    seed: u64,
    threads: usize,
) -> Result<(Vec<GeneratedDefinition>, usize)> {
    let threads = threads.clamp(1, words.len().max(1));
    let chunk = words.len().div_ceil(threads).max(1);
    let results: Vec<Result<Vec<Option<Vec<(usize, Vec<String>)>>>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = words
            .chunks(chunk)
            .enumerate()
            .map(|(c, ws)| {
                scope.spawn(move || {
                    ws.iter()
                        .enumerate()
                        .map(|(j, w)| {
                            let mut rng = word_rng(seed, c * chunk + j);
                            match generate_for_word(model, w, conditioning, sampling, &mut rng) {
                                Ok(d) => Ok(Some(d)),
                                Err(Error::MissingWord(_)) => Ok(None),
                                Err(e) => Err(e),
                            }
                        })
                        .collect()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("generation worker panicked")).collect()
    });
    let mut out = Vec::new();
    let mut skipped = 0;
    let per_word = results.into_iter().collect::<Result<Vec<_>>>()?.into_iter().flatten();
    for (w, defs) in words.iter().zip(per_word) {
        match defs {
            Some(defs) => out.extend(defs.into_iter().map(|(k, d)| GeneratedDefinition {
                headword: w.clone(),
                sense_index: k,
                definition: d,
            })),
            None => skipped += 1,
        }
    }
    if skipped > 0 {
        log::warn!("{skipped} words have no representation and were skipped");
    }
    Ok((out, skipped))
}

pub fn generation_to_tsv(rows: &[GeneratedDefinition]) -> String {
    let mut out = String::new();
    for r in rows {
        let _ = writeln!(out, "{}\t{}\t{}", r.headword, r.sense_index, r.definition.join(" "));
    }
    out
}

/// Sampling-based [`DefinitionSource`] for evaluation.
pub struct Generator<'a> {
    pub model: &'a DefModel,
    pub conditioning: Conditioning<'a>,
    pub sampling: SamplingConfig,
}

impl DefinitionSource for Generator<'_> {
    fn definitions(&self, headword: &str, word_index: usize, seed: u64) -> Result<Vec<Vec<String>>> {
        let mut rng = word_rng(seed, word_index);
        Ok(generate_for_word(self.model, headword, self.conditioning, &self.sampling, &mut rng)?
            .into_iter()
            .map(|(_, d)| d)
            .collect())
    }
}

#[cfg(test)]
mod tests;
