use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::textprep::{build_vocab, Vocabulary};

/// Corpus as dense word indices (0-based over the non-special vocabulary).
pub(crate) struct EncodedCorpus {
    pub words: Vec<String>,
    pub counts: Vec<u64>,
    pub sentences: Vec<Vec<u32>>,
    pub total_tokens: usize,
}

impl EncodedCorpus {
    pub fn new<S: AsRef<str>>(corpus: &[Vec<S>], min_count: u64) -> Result<Self> {
        if corpus.iter().all(Vec::is_empty) {
            return Err(Error::Config("training corpus is empty".into()));
        }
        let vocab = build_vocab(corpus.iter().flatten(), min_count, None)?;
        if vocab.is_empty() {
            return Err(Error::Config(format!("no token occurs at least {min_count} times")));
        }
        let offset = Vocabulary::PAD_ID + 1;
        let (words, counts): (Vec<String>, Vec<u64>) =
            vocab.words().map(|(_, w, c)| (w.to_string(), c)).unzip();
        let sentences: Vec<Vec<u32>> = corpus
            .iter()
            .map(|s| {
                s.iter()
                    .filter_map(|t| vocab.get(t.as_ref()))
                    .filter(|&id| !Vocabulary::is_special(id))
                    .map(|id| (id - offset) as u32)
                    .collect::<Vec<_>>()
            })
            .filter(|s| s.len() > 1)
            .collect();
        let total_tokens = sentences.iter().map(Vec::len).sum();
        Ok(Self {
            words,
            counts,
            sentences,
            total_tokens,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.words.len()
    }

    /// Unigram^0.75 noise distribution.
    pub fn noise(&self) -> NoiseSampler {
        NoiseSampler {
            dist: WeightedIndex::new(self.counts.iter().map(|&c| (c as f64).powf(0.75)))
                .expect("nonempty vocabulary with positive counts"),
            size: self.counts.len(),
        }
    }

    /// Contiguous sentence ranges, one per worker.
    pub fn shards(&self, workers: usize) -> Vec<std::ops::Range<usize>> {
        let n = self.sentences.len();
        let workers = workers.clamp(1, n.max(1));
        (0..workers)
            .map(|w| (w * n / workers)..((w + 1) * n / workers))
            .collect()
    }
}

/// Per-worker, per-epoch rng stream derived from the run seed.
pub(crate) fn worker_rng(seed: u64, epoch: usize, worker: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((epoch as u64) << 32) | (worker as u64 + 1));
    rng
}

pub(crate) fn linear_lr(initial: f64, processed: usize, total: usize) -> f64 {
    initial * (1.0 - processed as f64 / (total as f64 + 1.0)).max(1e-4)
}

/// Positions of the context words around `i` after the usual random window
/// shrink.
pub(crate) fn context_range(i: usize, len: usize, window: usize, rng: &mut impl Rng) -> (usize, usize) {
    let b = rng.gen_range(0..window);
    let reach = window - b;
    (i.saturating_sub(reach), (i + reach + 1).min(len))
}

pub(crate) struct NoiseSampler {
    dist: WeightedIndex<f64>,
    size: usize,
}

impl NoiseSampler {
    /// A noise word different from `avoid` (unless the vocabulary has one word).
    pub fn draw(&self, rng: &mut impl Rng, avoid: u32) -> u32 {
        loop {
            let n = self.dist.sample(rng) as u32;
            if n != avoid || self.size == 1 {
                return n;
            }
        }
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// log(sigmoid(x)) without overflow.
pub(crate) fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

pub(crate) fn init_uniform(rows: usize, dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    let half = 0.5 / dim as f64;
    (0..rows * dim).map(|_| rng.gen_range(-half..half)).collect()
}
