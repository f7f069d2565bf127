use rand::Rng;

use super::tape::{Graph, ParamId, ParamStore, Tensor, Var};
use super::INIT_BOUND;
use crate::error::{Error, Result};
use crate::textprep::Vocabulary;

/// y = W x + b
#[derive(Debug, Clone, Copy)]
pub struct Linear {
    pub w: ParamId,
    pub b: ParamId,
}

impl Linear {
    pub fn new(store: &mut ParamStore, name: &str, out: usize, inp: usize, rng: &mut impl Rng) -> Self {
        Self {
            w: store.add(&format!("{name}.weight"), Tensor::uniform(&[out, inp], INIT_BOUND, rng)),
            b: store.add(&format!("{name}.bias"), Tensor::zeros(&[out])),
        }
    }

    pub fn lookup(store: &ParamStore, name: &str) -> Result<Self> {
        Ok(Self {
            w: param(store, &format!("{name}.weight"))?,
            b: param(store, &format!("{name}.bias"))?,
        })
    }

    pub fn forward(&self, g: &mut Graph, x: Var) -> Result<Var> {
        let y = g.matvec(self.w, x)?;
        g.add_param(y, self.b)
    }
}

pub(crate) fn param(store: &ParamStore, name: &str) -> Result<ParamId> {
    store
        .id(name)
        .ok_or_else(|| Error::Format(format!("missing parameter {name}")))
}

/// One LSTM layer with gates stacked as [input, forget, output, candidate]
/// in a single [4H, in + H] matrix applied to (x ⊕ h).
#[derive(Debug, Clone, Copy)]
pub struct LstmLayer {
    pub gates: Linear,
    pub input_dim: usize,
    pub hidden: usize,
}

#[derive(Debug, Clone)]
pub struct Lstm {
    pub layers: Vec<LstmLayer>,
}

#[derive(Debug, Clone)]
pub struct LstmState {
    pub h: Vec<Var>,
    pub c: Vec<Var>,
}

impl LstmState {
    pub fn top(&self) -> Var {
        *self.h.last().expect("at least one layer")
    }
}

impl Lstm {
    pub fn new(store: &mut ParamStore, name: &str, input_dim: usize, hidden: usize, layers: usize, rng: &mut impl Rng) -> Self {
        let layers = (0..layers)
            .map(|l| {
                let inp = if l == 0 { input_dim } else { hidden };
                let gates = Linear::new(store, &format!("{name}{l}"), 4 * hidden, inp + hidden, rng);
                store.get_mut(gates.b).data[hidden..2 * hidden]
                    .iter_mut()
                    .for_each(|b| *b = 1.0);
                LstmLayer {
                    gates,
                    input_dim: inp,
                    hidden,
                }
            })
            .collect();
        Self { layers }
    }

    pub fn lookup(store: &ParamStore, name: &str, layers: usize) -> Result<Self> {
        let layers = (0..layers)
            .map(|l| {
                let gates = Linear::lookup(store, &format!("{name}{l}"))?;
                let shape = &store.get(gates.w).shape;
                let hidden = shape[0] / 4;
                Ok(LstmLayer {
                    gates,
                    input_dim: shape[1] - hidden,
                    hidden,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { layers })
    }

    pub fn zero_state(&self, g: &mut Graph) -> LstmState {
        let mut h = Vec::new();
        let mut c = Vec::new();
        for l in &self.layers {
            h.push(g.input(&vec![0.0; l.hidden]));
            c.push(g.input(&vec![0.0; l.hidden]));
        }
        LstmState { h, c }
    }

    pub fn step(&self, g: &mut Graph, x: Var, state: &LstmState) -> Result<LstmState> {
        let mut input = x;
        let mut next = LstmState {
            h: Vec::with_capacity(self.layers.len()),
            c: Vec::with_capacity(self.layers.len()),
        };
        for (l, layer) in self.layers.iter().enumerate() {
            if g.value(input).len() != layer.input_dim {
                return Err(Error::Shape(format!(
                    "lstm layer {l} expects {} inputs, got {}",
                    layer.input_dim,
                    g.value(input).len()
                )));
            }
            let hdim = layer.hidden;
            let xh = g.concat(&[input, state.h[l]]);
            let z = layer.gates.forward(g, xh)?;
            let i = g.slice(z, 0, hdim);
            let f = g.slice(z, hdim, hdim);
            let o = g.slice(z, 2 * hdim, hdim);
            let cand = g.slice(z, 3 * hdim, hdim);
            let i = g.sigmoid(i);
            let f = g.sigmoid(f);
            let o = g.sigmoid(o);
            let cand = g.tanh(cand);
            let keep = g.mul(f, state.c[l])?;
            let write = g.mul(i, cand)?;
            let c = g.add(keep, write)?;
            let tc = g.tanh(c);
            let h = g.mul(o, tc)?;
            next.h.push(h);
            next.c.push(c);
            input = h;
        }
        Ok(next)
    }

    /// Runs the stack over `inputs`; returns top-layer outputs and the final
    /// state.
    pub fn forward(&self, g: &mut Graph, inputs: &[Var], initial: Option<LstmState>) -> Result<(Vec<Var>, LstmState)> {
        let mut state = match initial {
            Some(s) => s,
            None => self.zero_state(g),
        };
        let mut out = Vec::with_capacity(inputs.len());
        for &x in inputs {
            state = self.step(g, x, &state)?;
            out.push(state.top());
        }
        Ok((out, state))
    }
}

/// Kernel widths and filter counts of the character CNN.
pub const DEFAULT_CHAR_FILTERS: [(usize, usize); 5] = [(2, 10), (3, 30), (4, 40), (5, 40), (6, 40)];

#[derive(Debug, Clone)]
pub struct CharCnn {
    pub embedding: ParamId,
    pub convs: Vec<(usize, Linear)>,
    pub char_dim: usize,
}

impl CharCnn {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        chars: usize,
        char_dim: usize,
        filters: &[(usize, usize)],
        rng: &mut impl Rng,
    ) -> Self {
        let mut emb = Tensor::uniform(&[chars, char_dim], INIT_BOUND, rng);
        // PAD embeds to zero
        let pad = Vocabulary::PAD_ID;
        emb.data[pad * char_dim..(pad + 1) * char_dim]
            .iter_mut()
            .for_each(|x| *x = 0.0);
        let embedding = store.add(&format!("{name}.embedding"), emb);
        let convs = filters
            .iter()
            .map(|&(k, n)| (k, Linear::new(store, &format!("{name}.conv{k}"), n, k * char_dim, rng)))
            .collect();
        Self {
            embedding,
            convs,
            char_dim,
        }
    }

    pub fn lookup(store: &ParamStore, name: &str, filters: &[(usize, usize)]) -> Result<Self> {
        let embedding = param(store, &format!("{name}.embedding"))?;
        let char_dim = store.get(embedding).shape[1];
        let convs = filters
            .iter()
            .map(|&(k, _)| Ok((k, Linear::lookup(store, &format!("{name}.conv{k}"))?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            embedding,
            convs,
            char_dim,
        })
    }

    pub fn output_dim(&self, store: &ParamStore) -> usize {
        self.convs.iter().map(|(_, l)| store.get(l.w).shape[0]).sum()
    }

    pub fn max_kernel(&self) -> usize {
        self.convs.iter().map(|(k, _)| *k).max().unwrap_or(1)
    }

    /// `PAD c1 .. cn PAD`, right-padded with PAD to the widest kernel.
    pub fn char_ids(&self, word: &str, chars: &Vocabulary) -> Vec<usize> {
        let mut ids = vec![Vocabulary::PAD_ID];
        let mut buf = [0u8; 4];
        ids.extend(word.chars().map(|c| chars.id(c.encode_utf8(&mut buf))));
        ids.push(Vocabulary::PAD_ID);
        while ids.len() < self.max_kernel() {
            ids.push(Vocabulary::PAD_ID);
        }
        ids
    }

    /// tanh of the max-pooled convolution features, concatenated over
    /// kernel widths.
    pub fn forward(&self, g: &mut Graph, char_ids: &[usize]) -> Result<Var> {
        let rows: Vec<Var> = char_ids.iter().map(|&c| g.row(self.embedding, c)).collect();
        let x = g.concat(&rows);
        let pooled = self
            .convs
            .iter()
            .map(|(k, lin)| g.conv_max(x, lin.w, lin.b, *k))
            .collect::<Result<Vec<_>>>()?;
        let feats = g.concat(&pooled);
        Ok(g.tanh(feats))
    }
}

/// Builds a character vocabulary from words; every character is kept.
pub fn char_vocabulary<'a>(words: impl IntoIterator<Item = &'a str>) -> Vocabulary {
    let mut counts = crate::textprep::TokenCounts::default();
    for w in words {
        let mut buf = [0u8; 4];
        for c in w.chars() {
            counts.add(c.encode_utf8(&mut buf));
        }
    }
    Vocabulary::from_counts(counts, 1, None)
}
