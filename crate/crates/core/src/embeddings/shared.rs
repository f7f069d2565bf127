use std::sync::atomic::{AtomicU64, Ordering::Relaxed};

/// Row-major matrix that several training threads update without locks.
///
/// Each element is an `AtomicU64` holding the bits of an `f64`, so
/// concurrent updates may lose increments but never tear a value.
pub(crate) struct SharedMatrix {
    cols: usize,
    data: Vec<AtomicU64>,
}

impl SharedMatrix {
    pub fn from_values(cols: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len() % cols.max(1), 0);
        Self {
            cols,
            data: values.into_iter().map(|v| AtomicU64::new(v.to_bits())).collect(),
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_values(cols, vec![0.0; rows * cols])
    }

    fn row(&self, r: usize) -> &[AtomicU64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        f64::from_bits(self.data[r * self.cols + c].load(Relaxed))
    }

    pub fn set(&self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c].store(v.to_bits(), Relaxed);
    }

    pub fn read_row(&self, r: usize, out: &mut [f64]) {
        for (o, a) in out.iter_mut().zip(self.row(r)) {
            *o = f64::from_bits(a.load(Relaxed));
        }
    }

    /// row += scale * v
    pub fn add_to_row(&self, r: usize, scale: f64, v: &[f64]) {
        for (a, x) in self.row(r).iter().zip(v) {
            let cur = f64::from_bits(a.load(Relaxed));
            a.store((cur + scale * x).to_bits(), Relaxed);
        }
    }

    pub fn into_values(self) -> Vec<f64> {
        self.data
            .into_iter()
            .map(|a| f64::from_bits(a.into_inner()))
            .collect()
    }
}
