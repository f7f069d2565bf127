//! Adaptive skip-gram: a Dirichlet-process mixture of sense prototypes per
//! word, fitted by online variational inference.
//!
//! For each occurrence of a word `x` the posterior over its prototypes is
//!
//! ```text
//! q(k) ∝ exp(E[log π_xk] + Σ_y log p(y | x, k))
//! ```
//!
//! where `E[log π_xk]` comes from the truncated stick-breaking posterior
//! `β_k ~ Beta(1 + n_k, α + Σ_{j>k} n_j)` over expected sense counts `n`,
//! and `log p(y | x, k)` is the negative-sampling log-likelihood of the
//! context word `y`. Each prototype then takes a gradient step weighted by
//! `q(k)`, and the counts move toward `q · freq(x)`.

use std::sync::atomic::{AtomicUsize, Ordering};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::digamma;

use super::corpus::{
    context_range, init_uniform, linear_lr, log_sigmoid, sigmoid, worker_rng, EncodedCorpus,
    NoiseSampler,
};
use super::shared::SharedMatrix;
use super::{SenseTable, DEFAULT_PRUNE_THRESHOLD};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdagramConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub initial_lr: f64,
    pub min_count: u64,
    pub seed: u64,
    pub threads: usize,
    pub max_prototypes: usize,
    pub concentration_alpha: f64,
    /// Senses with prior below this are dropped at lookup time.
    pub prune_threshold: f64,
    /// Responsibilities below this skip the gradient step.
    pub sense_threshold: f64,
    /// At the end of each epoch a prototype whose cosine to a heavier one
    /// exceeds this hands its expected counts over. 1 disables merging.
    pub merge_threshold: f64,
}

impl Default for AdagramConfig {
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
            max_prototypes: 5,
            concentration_alpha: 0.1,
            prune_threshold: DEFAULT_PRUNE_THRESHOLD,
            sense_threshold: 1e-10,
            merge_threshold: 0.9,
        }
    }
}

impl AdagramConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0
            || self.window == 0
            || self.negatives == 0
            || self.min_count == 0
            || self.threads == 0
            || self.max_prototypes == 0
        {
            return Err(Error::Config(
                "dim, window, negatives, min_count, threads and max_prototypes must be positive".into(),
            ));
        }
        if !(self.initial_lr > 0.0) || !(self.concentration_alpha > 0.0) {
            return Err(Error::Config("initial_lr and concentration_alpha must be positive".into()));
        }
        if !(self.merge_threshold > 0.0 && self.merge_threshold <= 1.0) {
            return Err(Error::Config("merge_threshold must lie in (0, 1]".into()));
        }
        if !(0.0..1.0).contains(&self.prune_threshold) {
            return Err(Error::Config("prune_threshold must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// `E[log π_k]` under the truncated stick-breaking posterior.
pub(crate) fn expected_log_pi(counts: &[f64], alpha: f64, out: &mut [f64]) {
    let t = counts.len();
    let mut remaining: f64 = counts.iter().sum();
    let mut acc = 0.0;
    for k in 0..t - 1 {
        remaining = (remaining - counts[k]).max(0.0);
        let a = 1.0 + counts[k];
        let b = alpha + remaining;
        let ab = digamma(a + b);
        out[k] = digamma(a) - ab + acc;
        acc += digamma(b) - ab;
    }
    out[t - 1] = acc;
}

/// `E[π_k]` under the same posterior; sums to one.
pub(crate) fn expected_pi(counts: &[f64], alpha: f64) -> Vec<f64> {
    let t = counts.len();
    let mut out = vec![0.0; t];
    let mut remaining: f64 = counts.iter().sum();
    let mut stick = 1.0;
    for k in 0..t - 1 {
        remaining = (remaining - counts[k]).max(0.0);
        let a = 1.0 + counts[k];
        let b = alpha + remaining;
        out[k] = stick * a / (a + b);
        stick *= b / (a + b);
    }
    out[t - 1] = stick;
    out
}

/// Folds near-duplicate prototypes of every word into the heaviest similar one.
fn merge_duplicates(input: &SharedMatrix, counts: &SharedMatrix, words: usize, t: usize, dim: usize, threshold: f64) -> usize {
    if threshold >= 1.0 || t < 2 {
        return 0;
    }
    let mut merged = 0;
    let mut vecs = vec![vec![0.0; dim]; t];
    for w in 0..words {
        let mut n: Vec<f64> = (0..t).map(|k| counts.get(w, k)).collect();
        for (k, v) in vecs.iter_mut().enumerate() {
            input.read_row(w * t + k, v);
        }
        let mut order: Vec<usize> = (0..t).collect();
        order.sort_by(|&a, &b| n[b].total_cmp(&n[a]).then(a.cmp(&b)));
        let mut kept: Vec<usize> = Vec::with_capacity(t);
        for &k in &order {
            let best = kept
                .iter()
                .filter_map(|&j| super::cosine(&vecs[k], &vecs[j]).ok().map(|c| (j, c)))
                .max_by(|a, b| a.1.total_cmp(&b.1));
            match best {
                Some((j, c)) if c > threshold => {
                    if n[k] > 0.0 {
                        merged += 1;
                    }
                    n[j] += n[k];
                    n[k] = 0.0;
                }
                _ => kept.push(k),
            }
        }
        for (k, &v) in n.iter().enumerate() {
            counts.set(w, k, v);
        }
    }
    merged
}

fn exp_normalize(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    z.iter_mut().for_each(|v| *v /= sum);
}

struct Model<'a> {
    /// (word * T + k) rows
    input: SharedMatrix,
    output: SharedMatrix,
    /// word rows, T columns
    counts: SharedMatrix,
    corpus: &'a EncodedCorpus,
    noise: NoiseSampler,
    processed: AtomicUsize,
    total: usize,
}

struct Scratch {
    senses: Vec<Vec<f64>>,
    grads: Vec<Vec<f64>>,
    out_row: Vec<f64>,
    out_delta: Vec<f64>,
    z: Vec<f64>,
    counts: Vec<f64>,
    /// (target word, label) pairs for the current center
    targets: Vec<(u32, f64)>,
    /// scores[target * T + k]
    scores: Vec<f64>,
}

impl Model<'_> {
    fn run_shard(&self, cfg: &AdagramConfig, range: std::ops::Range<usize>, rng: &mut ChaCha8Rng) {
        let t = cfg.max_prototypes;
        let dim = cfg.dim;
        let mut s = Scratch {
            senses: vec![vec![0.0; dim]; t],
            grads: vec![vec![0.0; dim]; t],
            out_row: vec![0.0; dim],
            out_delta: vec![0.0; dim],
            z: vec![0.0; t],
            counts: vec![0.0; t],
            targets: Vec::new(),
            scores: Vec::new(),
        };
        for sentence in &self.corpus.sentences[range] {
            let lr = linear_lr(cfg.initial_lr, self.processed.load(Ordering::Relaxed), self.total);
            for (i, &x) in sentence.iter().enumerate() {
                let (lo, hi) = context_range(i, sentence.len(), cfg.window, rng);
                s.targets.clear();
                for (j, &y) in sentence.iter().enumerate().take(hi).skip(lo) {
                    if j == i {
                        continue;
                    }
                    s.targets.push((y, 1.0));
                    for _ in 0..cfg.negatives {
                        s.targets.push((self.noise.draw(rng, y), 0.0));
                    }
                }
                if !s.targets.is_empty() {
                    self.update_center(cfg, x as usize, lr, &mut s);
                }
            }
            self.processed.fetch_add(sentence.len(), Ordering::Relaxed);
        }
    }

    fn update_center(&self, cfg: &AdagramConfig, x: usize, lr: f64, s: &mut Scratch) {
        let t = cfg.max_prototypes;
        for k in 0..t {
            self.input.read_row(x * t + k, &mut s.senses[k]);
            s.counts[k] = self.counts.get(x, k);
        }
        expected_log_pi(&s.counts, cfg.concentration_alpha, &mut s.z);

        s.scores.clear();
        for &(target, label) in &s.targets {
            self.output.read_row(target as usize, &mut s.out_row);
            for k in 0..t {
                let score: f64 = s.senses[k].iter().zip(&s.out_row).map(|(a, b)| a * b).sum();
                s.scores.push(score);
                s.z[k] += if label > 0.5 { log_sigmoid(score) } else { log_sigmoid(-score) };
            }
        }
        exp_normalize(&mut s.z);

        let freq = self.corpus.counts[x] as f64;
        for k in 0..t {
            let n = s.counts[k];
            self.counts.set(x, k, n + lr * (s.z[k] * freq - n));
        }

        for g in s.grads.iter_mut() {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
        for (ti, &(target, label)) in s.targets.iter().enumerate() {
            self.output.read_row(target as usize, &mut s.out_row);
            s.out_delta.iter_mut().for_each(|v| *v = 0.0);
            for k in 0..t {
                if s.z[k] < cfg.sense_threshold {
                    continue;
                }
                let g = s.z[k] * lr * (label - sigmoid(s.scores[ti * t + k]));
                for (gr, o) in s.grads[k].iter_mut().zip(&s.out_row) {
                    *gr += g * o;
                }
                for (d, v) in s.out_delta.iter_mut().zip(&s.senses[k]) {
                    *d += g * v;
                }
            }
            self.output.add_to_row(target as usize, 1.0, &s.out_delta);
        }
        for k in 0..t {
            if s.z[k] >= cfg.sense_threshold {
                self.input.add_to_row(x * t + k, 1.0, &s.grads[k]);
            }
        }
    }
}

/// Trains multi-sense embeddings. The returned table holds every prototype
/// with its expected stick-breaking prior.
pub fn train_adagram<S: AsRef<str> + Sync>(corpus: &[Vec<S>], cfg: &AdagramConfig) -> Result<SenseTable> {
    cfg.validate()?;
    let enc = EncodedCorpus::new(corpus, cfg.min_count)?;
    let v = enc.vocab_size();
    let t = cfg.max_prototypes;
    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // Expected counts start spread evenly so every prototype is trained
    // from the first pass; merging later removes the redundant ones.
    let counts = SharedMatrix::zeros(v, t);
    for (w, &c) in enc.counts.iter().enumerate() {
        for k in 0..t {
            counts.set(w, k, c as f64 / t as f64);
        }
    }
    let model = Model {
        input: SharedMatrix::from_values(cfg.dim, init_uniform(v * t, cfg.dim, &mut init_rng)),
        output: SharedMatrix::zeros(v, cfg.dim),
        counts,
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
        let merged = merge_duplicates(&model.input, &model.counts, v, t, cfg.dim, cfg.merge_threshold);
        log::info!("adagram epoch {}/{} done, {merged} prototypes merged", epoch + 1, cfg.epochs);
    }

    let counts = model.counts.into_values();
    let priors: Vec<f64> = counts
        .chunks_exact(t)
        .flat_map(|row| expected_pi(row, cfg.concentration_alpha))
        .collect();
    Ok(SenseTable::from_parts(
        cfg.dim,
        t,
        cfg.prune_threshold,
        enc.words.clone(),
        priors,
        model.input.into_values(),
    ))
}
