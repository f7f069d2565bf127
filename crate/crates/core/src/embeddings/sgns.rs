use std::sync::atomic::{AtomicUsize, Ordering};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::corpus::{context_range, init_uniform, linear_lr, sigmoid, worker_rng, EncodedCorpus, NoiseSampler};
use super::shared::SharedMatrix;
use super::EmbeddingTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SgnsConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub initial_lr: f64,
    pub min_count: u64,
    pub seed: u64,
    /// Worker threads; 1 gives bit-reproducible training.
    pub threads: usize,
}

impl Default for SgnsConfig {
    fn default() -> Self {
        Self {
            dim: 300,
            window: 5,
            negatives: 5,
            epochs: 5,
            initial_lr: 0.025,
            min_count: 5,
            seed: 1,
            threads: 1,
        }
    }
}

impl SgnsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.window == 0 || self.negatives == 0 || self.min_count == 0 || self.threads == 0 {
            return Err(Error::Config(
                "dim, window, negatives, min_count and threads must be positive".into(),
            ));
        }
        if !(self.initial_lr > 0.0) {
            return Err(Error::Config("initial_lr must be positive".into()));
        }
        Ok(())
    }
}

struct Model<'a> {
    input: SharedMatrix,
    output: SharedMatrix,
    corpus: &'a EncodedCorpus,
    noise: NoiseSampler,
    processed: AtomicUsize,
    total: usize,
}

impl Model<'_> {
    fn run_shard(&self, cfg: &SgnsConfig, range: std::ops::Range<usize>, rng: &mut ChaCha8Rng) {
        let dim = cfg.dim;
        let mut center = vec![0.0; dim];
        let mut grad = vec![0.0; dim];
        let mut out_row = vec![0.0; dim];
        for sentence in &self.corpus.sentences[range] {
            let lr = linear_lr(cfg.initial_lr, self.processed.load(Ordering::Relaxed), self.total);
            for (i, &x) in sentence.iter().enumerate() {
                let (lo, hi) = context_range(i, sentence.len(), cfg.window, rng);
                for (j, &y) in sentence.iter().enumerate().take(hi).skip(lo) {
                    if j == i {
                        continue;
                    }
                    self.input.read_row(x as usize, &mut center);
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    for n in 0..=cfg.negatives {
                        let (target, label) = if n == 0 {
                            (y, 1.0)
                        } else {
                            (self.noise.draw(rng, y), 0.0)
                        };
                        self.output.read_row(target as usize, &mut out_row);
                        let score: f64 = center.iter().zip(&out_row).map(|(a, b)| a * b).sum();
                        let g = (label - sigmoid(score)) * lr;
                        for (gr, o) in grad.iter_mut().zip(&out_row) {
                            *gr += g * o;
                        }
                        self.output.add_to_row(target as usize, g, &center);
                    }
                    self.input.add_to_row(x as usize, 1.0, &grad);
                }
            }
            self.processed.fetch_add(sentence.len(), Ordering::Relaxed);
        }
    }
}

/// Skip-gram with negative sampling. Returns input vectors.
pub fn train_sgns<S: AsRef<str> + Sync>(corpus: &[Vec<S>], cfg: &SgnsConfig) -> Result<EmbeddingTable> {
    cfg.validate()?;
    let enc = EncodedCorpus::new(corpus, cfg.min_count)?;
    let v = enc.vocab_size();
    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let model = Model {
        input: SharedMatrix::from_values(cfg.dim, init_uniform(v, cfg.dim, &mut init_rng)),
        output: SharedMatrix::zeros(v, cfg.dim),
        noise: enc.noise(),
        corpus: &enc,
        processed: AtomicUsize::new(0),
        total: cfg.epochs * enc.total_tokens,
    };
    for epoch in 0..cfg.epochs {
        let shards = enc.shards(cfg.threads);
        std::thread::scope(|scope| {
            for (w, range) in shards.into_iter().enumerate() {
                let model = &model;
                scope.spawn(move || {
                    let mut rng = worker_rng(cfg.seed, epoch, w);
                    model.run_shard(cfg, range, &mut rng);
                });
            }
        });
        log::info!("sgns epoch {}/{} done", epoch + 1, cfg.epochs);
    }
    EmbeddingTable::from_rows(cfg.dim, enc.words.clone(), model.input.into_values())
}
