use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DefModel;
use crate::embeddings::WordVectors;
use crate::error::{Error, Result};
use crate::lexicon::Lexicon;
use crate::matcher::SenseDefPair;
use crate::neural::{adam_step, AdamState, Gradients, Graph};

/// One (conditioning vector, headword, definition) training item.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub word: String,
    pub condition: Vec<f64>,
    pub definition: Vec<String>,
}

impl From<&SenseDefPair> for TrainingExample {
    fn from(p: &SenseDefPair) -> Self {
        Self {
            word: p.headword.clone(),
            condition: p.sense_vector.clone(),
            definition: p.definition.clone(),
        }
    }
}

/// Word-conditioned examples for the base model: every definition of every
/// headword that has a vector. Returns the examples and the number of
/// headwords skipped for lack of a vector.
pub fn examples_from_lexicon(lex: &Lexicon, vectors: &dyn WordVectors) -> (Vec<TrainingExample>, usize) {
    let mut out = Vec::new();
    let mut skipped = 0;
    for e in lex.entries() {
        let Some(v) = vectors.vector(&e.headword) else {
            skipped += 1;
            continue;
        };
        out.extend(e.definitions.iter().map(|d| TrainingExample {
            word: e.headword.clone(),
            condition: v.to_vec(),
            definition: d.clone(),
        }));
    }
    if skipped > 0 {
        log::warn!("{skipped} headwords have no vector and were skipped");
    }
    (out, skipped)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean NLL per token, one entry per epoch.
    pub train_loss: Vec<f64>,
    pub dev_loss: Vec<f64>,
    /// Zero-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub stopped_early: bool,
    pub skipped_examples: usize,
}

struct Prepared<'a> {
    example: &'a TrainingExample,
    ids: Vec<usize>,
}

fn prepare<'a>(model: &DefModel, examples: &'a [TrainingExample]) -> (Vec<Prepared<'a>>, usize) {
    let mut skipped = 0;
    let out = examples
        .iter()
        .filter_map(|e| {
            let ok = e.condition.len() == model.config.condition_dim
                && e.condition.iter().all(|x| x.is_finite())
                && !e.definition.is_empty();
            if ok {
                Some(Prepared {
                    example: e,
                    ids: model.encode(&e.definition),
                })
            } else {
                skipped += 1;
                None
            }
        })
        .collect();
    (out, skipped)
}

fn nll_of(model: &DefModel, items: &[Prepared]) -> Result<f64> {
    let mut total = 0.0;
    let mut tokens = 0;
    for p in items {
        let mut g = Graph::new(&model.params);
        let (loss, n) = model.sequence_graph(&mut g, &p.example.condition, &p.example.word, &p.ids)?;
        total += g.value(loss)[0];
        tokens += n;
    }
    Ok(total / tokens as f64)
}

/// Token-weighted mean NLL over `examples`.
pub fn corpus_nll(model: &DefModel, examples: &[TrainingExample]) -> Result<f64> {
    let (items, _) = prepare(model, examples);
    if items.is_empty() {
        return Err(Error::Config("no usable example".into()));
    }
    nll_of(model, &items)
}

/// Mini-batch Adam on mean per-token NLL with global-norm clipping. Dev NLL
/// is measured after every epoch; the best-dev parameters are kept and
/// training stops after `patience` epochs without improvement. Without dev
/// examples the training loss is used for selection.
pub fn train_defmodel(model: &mut DefModel, train: &[TrainingExample], dev: &[TrainingExample]) -> Result<TrainReport> {
    let cfg = model.config.clone();
    let (items, skipped) = prepare(model, train);
    if items.is_empty() {
        return Err(Error::Config("no training example is usable".into()));
    }
    if skipped > 0 {
        log::warn!("{skipped} training examples skipped (bad condition or empty definition)");
    }
    let (dev_items, _) = prepare(model, dev);
    if dev_items.is_empty() {
        log::warn!("no dev examples; selecting on training loss");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut adam = AdamState::new(&model.params, cfg.lr);
    let mut grads = Gradients::zeros_like(&model.params);
    let mut order: Vec<usize> = (0..items.len()).collect();
    let mut report = TrainReport {
        train_loss: Vec::new(),
        dev_loss: Vec::new(),
        best_epoch: 0,
        stopped_early: false,
        skipped_examples: skipped,
    };
    let mut best_loss = f64::INFINITY;
    let mut best_params = model.params.clone();
    let mut since_best = 0;

    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut epoch_tokens = 0;
        for batch in order.chunks(cfg.batch_size) {
            grads.clear();
            let tokens: usize = batch.iter().map(|&i| items[i].ids.len() + 1).sum();
            for &i in batch {
                let p = &items[i];
                let mut g = Graph::new(&model.params);
                let (loss, _) = model.sequence_graph(&mut g, &p.example.condition, &p.example.word, &p.ids)?;
                epoch_loss += g.value(loss)[0];
                g.backward(loss, 1.0 / tokens as f64, &mut grads);
            }
            epoch_tokens += tokens;
            grads.clip_global_norm(cfg.clip_norm);
            adam_step(&mut model.params, &grads, &mut adam)?;
        }
        let train_loss = epoch_loss / epoch_tokens as f64;
        let dev_loss = if dev_items.is_empty() {
            nll_of(model, &items)?
        } else {
            nll_of(model, &dev_items)?
        };
        log::info!("epoch {}: train nll {train_loss:.4}, dev nll {dev_loss:.4}", epoch + 1);
        report.train_loss.push(train_loss);
        report.dev_loss.push(dev_loss);
        if dev_loss < best_loss {
            best_loss = dev_loss;
            best_params = model.params.clone();
            report.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                report.stopped_early = epoch + 1 < cfg.max_epochs;
                break;
            }
        }
    }
    model.params = best_params;
    Ok(report)
}
