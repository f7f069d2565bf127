use std::collections::HashMap;

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if shape.iter().any(|&d| d == 0) || n != data.len() {
            return Err(Error::Shape(format!("shape {shape:?} does not hold {} values", data.len())));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::Format("tensor holds a non-finite value".into()));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn uniform(shape: &[usize], bound: f64, rng: &mut impl Rng) -> Self {
        let n = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: (0..n).map(|_| rng.gen_range(-bound..bound)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub(crate) usize);

/// Named parameter tensors in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    names: Vec<String>,
    tensors: Vec<Tensor>,
    index: HashMap<String, usize>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, tensor: Tensor) -> ParamId {
        assert!(!self.index.contains_key(name), "duplicate parameter {name}");
        self.index.insert(name.to_string(), self.tensors.len());
        self.names.push(name.to_string());
        self.tensors.push(tensor);
        ParamId(self.tensors.len() - 1)
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).map(|&i| ParamId(i))
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.tensors[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> + '_ {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }

    pub fn num_values(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    /// All values, concatenated in parameter order.
    pub fn flatten(&self) -> Vec<f64> {
        self.tensors.iter().flat_map(|t| t.data.iter().copied()).collect()
    }

    pub fn set_flat(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.num_values() {
            return Err(Error::Shape(format!("{} values for {} parameters", values.len(), self.num_values())));
        }
        let mut off = 0;
        for t in &mut self.tensors {
            let n = t.data.len();
            t.data.copy_from_slice(&values[off..off + n]);
            off += n;
        }
        Ok(())
    }
}

/// Gradient buffers aligned with a [`ParamStore`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub tensors: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(store: &ParamStore) -> Self {
        Self {
            tensors: store.tensors.iter().map(|t| vec![0.0; t.len()]).collect(),
        }
    }

    pub fn clear(&mut self) {
        for t in &mut self.tensors {
            t.iter_mut().for_each(|g| *g = 0.0);
        }
    }

    pub fn get(&self, id: ParamId) -> &[f64] {
        &self.tensors[id.0]
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.tensors.iter().flatten().copied().collect()
    }

    pub fn global_norm(&self) -> f64 {
        self.tensors.iter().flatten().map(|g| g * g).sum::<f64>().sqrt()
    }

    /// Rescales so the global norm is at most `max_norm`; returns the norm
    /// before clipping.
    pub fn clip_global_norm(&mut self, max_norm: f64) -> f64 {
        let norm = self.global_norm();
        if norm > max_norm && norm > 0.0 {
            let s = max_norm / norm;
            for t in &mut self.tensors {
                t.iter_mut().for_each(|g| *g *= s);
            }
        }
        norm
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

impl Var {
    /// Position in the graph, which indexes the node gradients returned by
    /// [`Graph::backward`].
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Input,
    Row { table: ParamId, row: usize },
    /// W x with W of shape [out, in]
    MatVec { w: ParamId, x: Var },
    AddParam { x: Var, b: ParamId },
    Add(Var, Var),
    Mul(Var, Var),
    Sigmoid(Var),
    Tanh(Var),
    Concat(Vec<Var>),
    Slice { x: Var, start: usize },
    /// 1-D convolution over rows of width `width`, kernel `k`, then max over
    /// positions; `argmax[f]` is the winning position of filter f.
    ConvMax { x: Var, w: ParamId, b: ParamId, k: usize, width: usize, argmax: Vec<usize> },
    /// -log softmax(logits)[target]; keeps the probabilities.
    SoftmaxXent { logits: Var, target: usize, probs: Vec<f64> },
    Sum(Vec<Var>),
    Total(Var),
}

struct Node {
    value: Vec<f64>,
    op: Op,
}

/// Eagerly evaluated computation record over a borrowed parameter store.
pub struct Graph<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl<'p> Graph<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Self {
            params,
            nodes: Vec::new(),
        }
    }

    pub fn params(&self) -> &'p ParamStore {
        self.params
    }

    fn push(&mut self, value: Vec<f64>, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].value
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn input(&mut self, values: &[f64]) -> Var {
        self.push(values.to_vec(), Op::Input)
    }

    pub fn row(&mut self, table: ParamId, row: usize) -> Var {
        let t = self.params.get(table);
        let width = t.shape[1];
        let value = t.data[row * width..(row + 1) * width].to_vec();
        self.push(value, Op::Row { table, row })
    }

    pub fn matvec(&mut self, w: ParamId, x: Var) -> Result<Var> {
        let wt = self.params.get(w);
        let (out, inp) = (wt.shape[0], wt.shape[1]);
        let xv = self.value(x);
        if xv.len() != inp {
            return Err(Error::Shape(format!(
                "{} expects input of {inp}, got {}",
                self.params.name(w),
                xv.len()
            )));
        }
        let value: Vec<f64> = wt
            .data
            .chunks_exact(inp)
            .take(out)
            .map(|r| r.iter().zip(xv).map(|(a, b)| a * b).sum())
            .collect();
        Ok(self.push(value, Op::MatVec { w, x }))
    }

    pub fn add_param(&mut self, x: Var, b: ParamId) -> Result<Var> {
        let bt = self.params.get(b);
        let xv = self.value(x);
        if bt.len() != xv.len() {
            return Err(Error::Shape(format!("bias {} vs input {}", bt.len(), xv.len())));
        }
        let value = xv.iter().zip(&bt.data).map(|(a, c)| a + c).collect();
        Ok(self.push(value, Op::AddParam { x, b }))
    }

    fn same_len(&self, a: Var, b: Var) -> Result<()> {
        if self.value(a).len() != self.value(b).len() {
            return Err(Error::Shape(format!(
                "elementwise op on lengths {} and {}",
                self.value(a).len(),
                self.value(b).len()
            )));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_len(a, b)?;
        let value = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x + y).collect();
        Ok(self.push(value, Op::Add(a, b)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_len(a, b)?;
        let value = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x * y).collect();
        Ok(self.push(value, Op::Mul(a, b)))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.value(a).iter().map(|&x| sigmoid(x)).collect();
        self.push(value, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let value = self.value(a).iter().map(|x| x.tanh()).collect();
        self.push(value, Op::Tanh(a))
    }

    pub fn concat(&mut self, parts: &[Var]) -> Var {
        let value = parts.iter().flat_map(|p| self.value(*p).iter().copied()).collect();
        self.push(value, Op::Concat(parts.to_vec()))
    }

    pub fn slice(&mut self, x: Var, start: usize, len: usize) -> Var {
        let value = self.value(x)[start..start + len].to_vec();
        self.push(value, Op::Slice { x, start })
    }

    /// Valid 1-D convolution with stride 1 over `x` viewed as rows of
    /// `width`, followed by max over positions. `w` has shape
    /// [filters, k * width], `b` has shape [filters].
    pub fn conv_max(&mut self, x: Var, w: ParamId, b: ParamId, k: usize) -> Result<Var> {
        let wt = self.params.get(w);
        let bt = self.params.get(b);
        let filters = wt.shape[0];
        let width = wt.shape[1] / k;
        let xv = self.value(x);
        if wt.shape[1] != k * width || xv.len() % width != 0 || xv.len() / width < k {
            return Err(Error::Shape(format!(
                "{}: kernel {k} over {} values of width {width}",
                self.params.name(w),
                xv.len()
            )));
        }
        let positions = xv.len() / width - k + 1;
        let mut value = vec![f64::NEG_INFINITY; filters];
        let mut argmax = vec![0; filters];
        for p in 0..positions {
            let window = &xv[p * width..(p + k) * width];
            for f in 0..filters {
                let row = &wt.data[f * k * width..(f + 1) * k * width];
                let s: f64 = row.iter().zip(window).map(|(a, c)| a * c).sum::<f64>() + bt.data[f];
                if s > value[f] {
                    value[f] = s;
                    argmax[f] = p;
                }
            }
        }
        Ok(self.push(
            value,
            Op::ConvMax {
                x,
                w,
                b,
                k,
                width,
                argmax,
            },
        ))
    }

    /// Cross-entropy of `target` under softmax(logits).
    pub fn softmax_xent(&mut self, logits: Var, target: usize) -> Result<Var> {
        let probs = super::softmax(self.value(logits), 1.0)?;
        if target >= probs.len() {
            return Err(Error::Shape(format!("target {target} outside {} classes", probs.len())));
        }
        let loss = -probs[target].max(f64::MIN_POSITIVE).ln();
        Ok(self.push(vec![loss], Op::SoftmaxXent { logits, target, probs }))
    }

    /// Elementwise sum of equal-length values.
    pub fn sum(&mut self, parts: &[Var]) -> Result<Var> {
        let n = self.value(parts[0]).len();
        let mut value = vec![0.0; n];
        for p in parts {
            let v = self.value(*p);
            if v.len() != n {
                return Err(Error::Shape("sum of unequal lengths".into()));
            }
            value.iter_mut().zip(v).for_each(|(a, b)| *a += b);
        }
        Ok(self.push(value, Op::Sum(parts.to_vec())))
    }

    /// Sum of all components, as a length-1 value.
    pub fn total(&mut self, x: Var) -> Var {
        let value = vec![self.value(x).iter().sum()];
        self.push(value, Op::Total(x))
    }

    /// Reverse pass from `root` (whose gradient is `seed` in every
    /// component). Parameter gradients are accumulated into `grads`; the
    /// returned vector holds the gradient of every node.
    pub fn backward(&self, root: Var, seed: f64, grads: &mut Gradients) -> Vec<Vec<f64>> {
        let mut g: Vec<Vec<f64>> = self.nodes.iter().map(|n| vec![0.0; n.value.len()]).collect();
        g[root.0].iter_mut().for_each(|x| *x = seed);
        for i in (0..=root.0).rev() {
            if g[i].iter().all(|&x| x == 0.0) {
                continue;
            }
            let gi = std::mem::take(&mut g[i]);
            let node = &self.nodes[i];
            match &node.op {
                Op::Input => {}
                Op::Row { table, row } => {
                    let width = gi.len();
                    let dst = &mut grads.tensors[table.0][row * width..(row + 1) * width];
                    dst.iter_mut().zip(&gi).for_each(|(d, s)| *d += s);
                }
                Op::MatVec { w, x } => {
                    let wt = self.params.get(*w);
                    let inp = wt.shape[1];
                    let xv = &self.nodes[x.0].value;
                    let gw = &mut grads.tensors[w.0];
                    let gx = &mut g[x.0];
                    for (o, &go) in gi.iter().enumerate() {
                        if go == 0.0 {
                            continue;
                        }
                        let wrow = &wt.data[o * inp..(o + 1) * inp];
                        let gwrow = &mut gw[o * inp..(o + 1) * inp];
                        for j in 0..inp {
                            gwrow[j] += go * xv[j];
                            gx[j] += go * wrow[j];
                        }
                    }
                }
                Op::AddParam { x, b } => {
                    grads.tensors[b.0].iter_mut().zip(&gi).for_each(|(d, s)| *d += s);
                    g[x.0].iter_mut().zip(&gi).for_each(|(d, s)| *d += s);
                }
                Op::Add(a, b) => {
                    g[a.0].iter_mut().zip(&gi).for_each(|(d, s)| *d += s);
                    g[b.0].iter_mut().zip(&gi).for_each(|(d, s)| *d += s);
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    for j in 0..gi.len() {
                        g[a.0][j] += gi[j] * vb[j];
                        g[b.0][j] += gi[j] * va[j];
                    }
                }
                Op::Sigmoid(a) => {
                    for (j, &y) in node.value.iter().enumerate() {
                        g[a.0][j] += gi[j] * y * (1.0 - y);
                    }
                }
                Op::Tanh(a) => {
                    for (j, &y) in node.value.iter().enumerate() {
                        g[a.0][j] += gi[j] * (1.0 - y * y);
                    }
                }
                Op::Concat(parts) => {
                    let mut off = 0;
                    for p in parts {
                        let n = self.nodes[p.0].value.len();
                        g[p.0].iter_mut().zip(&gi[off..off + n]).for_each(|(d, s)| *d += s);
                        off += n;
                    }
                }
                Op::Slice { x, start } => {
                    g[x.0][*start..*start + gi.len()]
                        .iter_mut()
                        .zip(&gi)
                        .for_each(|(d, s)| *d += s);
                }
                Op::ConvMax {
                    x,
                    w,
                    b,
                    k,
                    width,
                    argmax,
                } => {
                    let span = k * width;
                    let wt = self.params.get(*w);
                    let xv = &self.nodes[x.0].value;
                    for (f, &p) in argmax.iter().enumerate() {
                        let go = gi[f];
                        if go == 0.0 {
                            continue;
                        }
                        grads.tensors[b.0][f] += go;
                        let window = &xv[p * width..p * width + span];
                        let gw = &mut grads.tensors[w.0][f * span..(f + 1) * span];
                        gw.iter_mut().zip(window).for_each(|(d, s)| *d += go * s);
                        let wrow = &wt.data[f * span..(f + 1) * span];
                        g[x.0][p * width..p * width + span]
                            .iter_mut()
                            .zip(wrow)
                            .for_each(|(d, s)| *d += go * s);
                    }
                }
                Op::SoftmaxXent { logits, target, probs } => {
                    let go = gi[0];
                    for (j, &p) in probs.iter().enumerate() {
                        let y = if j == *target { 1.0 } else { 0.0 };
                        g[logits.0][j] += go * (p - y);
                    }
                }
                Op::Sum(parts) => {
                    for p in parts {
                        g[p.0].iter_mut().zip(&gi).for_each(|(d, s)| *d += s);
                    }
                }
                Op::Total(x) => {
                    g[x.0].iter_mut().for_each(|d| *d += gi[0]);
                }
            }
            g[i] = gi;
        }
        g
    }
}
