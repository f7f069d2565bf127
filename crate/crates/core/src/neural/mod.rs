//! Small reverse-mode differentiation engine in f64 with the layers the
//! definition model needs: dense, LSTM, character CNN, softmax and
//! cross-entropy, plus Adam and a finite-difference checker.

mod adam;
mod layers;
mod tape;

pub use adam::{adam_step, AdamState};
pub use layers::{char_vocabulary, CharCnn, Linear, Lstm, LstmLayer, LstmState, DEFAULT_CHAR_FILTERS};
pub(crate) use layers::param;
pub use tape::{Gradients, Graph, ParamId, ParamStore, Tensor, Var};

use crate::error::{Error, Result};

/// Weights start in U(-INIT_BOUND, INIT_BOUND).
pub const INIT_BOUND: f64 = 0.05;

/// softmax(logits / temperature) with max subtraction. Entries equal to
/// `-inf` get probability zero.
pub fn softmax(logits: &[f64], temperature: f64) -> Result<Vec<f64>> {
    if !(temperature > 0.0) {
        return Err(Error::Config(format!("temperature must be positive, got {temperature}")));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::Config("softmax needs at least one finite logit".into()));
    }
    let mut out: Vec<f64> = logits.iter().map(|&l| ((l - max) / temperature).exp()).collect();
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= sum);
    Ok(out)
}

/// -log p[target]
pub fn cross_entropy(probs: &[f64], target: usize) -> f64 {
    -probs[target].ln()
}

/// Max over coordinates of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8),
/// with central differences of step `eps`. `f` returns the value and the
/// analytic gradient at a point.
pub fn grad_check<F>(mut f: F, point: &[f64], eps: f64) -> f64
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let (_, analytic) = f(point);
    let mut x = point.to_vec();
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + eps;
        let (plus, _) = f(&x);
        x[i] = orig - eps;
        let (minus, _) = f(&x);
        x[i] = orig;
        let numeric = (plus - minus) / (2.0 * eps);
        let err = (analytic[i] - numeric).abs() / analytic[i].abs().max(numeric.abs()).max(1e-8);
        worst = worst.max(err);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn softmax_examples() {
        let p = softmax(&[3.0, 3.0, 3.0, 3.0], 1.0).unwrap();
        assert!(p.iter().all(|&x| (x - 0.25).abs() < 1e-15));
        let sharp = softmax(&[2.0, 1.0], 0.1).unwrap();
        let soft = softmax(&[2.0, 1.0], 1.0).unwrap();
        assert!(sharp[0] > soft[0]);
        assert!(matches!(softmax(&[1.0], 0.0), Err(Error::Config(_))));
        assert!(softmax(&[1.0], -1.0).is_err());
        let masked = softmax(&[1.0, f64::NEG_INFINITY], 1.0).unwrap();
        assert_eq!(masked, vec![1.0, 0.0]);
    }

    proptest! {
        #[test]
        fn softmax_normalized_and_argmax_stable(
            logits in prop::collection::vec(-50.0f64..50.0, 1..20),
            t in 0.01f64..10.0,
        ) {
            let p = softmax(&logits, t).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(p.iter().all(|&x| x >= 0.0));
            let am = |v: &[f64]| v.iter().enumerate().fold(0, |b, (i, &x)| if x > v[b] { i } else { b });
            prop_assert_eq!(am(&p), am(&logits));
        }

        #[test]
        fn cross_entropy_of_true_class(logits in prop::collection::vec(-10.0f64..10.0, 2..8), t in 0usize..8) {
            let t = t % logits.len();
            let p = softmax(&logits, 1.0).unwrap();
            let ce = cross_entropy(&p, t);
            prop_assert!(ce >= 0.0);
            prop_assert!((ce + p[t].ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn cross_entropy_zero_iff_certain() {
        assert_eq!(cross_entropy(&[1.0, 0.0], 0), 0.0);
        assert!(cross_entropy(&[0.9, 0.1], 0) > 0.0);
    }

    #[test]
    fn grad_check_exact_cases() {
        let affine = |x: &[f64]| (3.0 * x[0] - 2.0 * x[1] + 1.0, vec![3.0, -2.0]);
        assert!(grad_check(affine, &[0.3, -1.2], 1e-4) < 1e-8);
        let tanh = |x: &[f64]| (x[0].tanh(), vec![1.0 - x[0].tanh().powi(2)]);
        assert!(grad_check(tanh, &[0.0], 1e-4) < 1e-7);
        let wrong = |x: &[f64]| (x[0] * x[0], vec![3.0 * x[0]]);
        assert!(grad_check(wrong, &[1.0], 1e-4) > 0.1);
    }

    #[test]
    fn softmax_xent_grad_check() {
        let store = ParamStore::new();
        let f = |x: &[f64]| {
            let mut g = Graph::new(&store);
            let l = g.input(x);
            let loss = g.softmax_xent(l, 2).unwrap();
            let mut grads = Gradients::zeros_like(&store);
            let ng = g.backward(loss, 1.0, &mut grads);
            (g.value(loss)[0], ng[l.index()].clone())
        };
        assert!(grad_check(f, &[0.2, -1.0, 0.5, 2.0], 1e-4) < 1e-5);
    }

    /// Relative error of parameter gradients for a fixed random linear
    /// readout of every output of `build`.
    fn check_params<B>(store: &ParamStore, build: B) -> f64
    where
        B: Fn(&mut Graph) -> Vec<Var>,
    {
        use rand::Rng;
        let template = store.clone();
        grad_check(
            |x: &[f64]| {
                let mut s = template.clone();
                s.set_flat(x).unwrap();
                let mut g = Graph::new(&s);
                let outs = build(&mut g);
                let mut rng = ChaCha8Rng::seed_from_u64(99);
                let mut terms = Vec::new();
                for &o in &outs {
                    let ws: Vec<f64> = (0..g.value(o).len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let w = g.input(&ws);
                    let m = g.mul(o, w).unwrap();
                    terms.push(g.total(m));
                }
                let loss = g.sum(&terms).unwrap();
                let mut grads = Gradients::zeros_like(&s);
                g.backward(loss, 1.0, &mut grads);
                (g.value(loss)[0], grads.flatten())
            },
            &store.flatten(),
            1e-4,
        )
    }

    #[test]
    fn lstm_zero_params_give_zero_states() {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let lstm = Lstm::new(&mut store, "lstm", 3, 4, 2, &mut rng);
        store.set_flat(&vec![0.0; store.num_values()]).unwrap();
        let mut g = Graph::new(&store);
        let xs: Vec<Var> = (0..5).map(|i| g.input(&[i as f64, 1.0, -2.0])).collect();
        let (outs, _) = lstm.forward(&mut g, &xs, None).unwrap();
        assert_eq!(outs.len(), 5);
        for o in outs {
            assert!(g.value(o).iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn lstm_rejects_bad_input_dim() {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let lstm = Lstm::new(&mut store, "lstm", 3, 4, 1, &mut rng);
        let mut g = Graph::new(&store);
        let x = g.input(&[1.0, 2.0]);
        assert!(matches!(lstm.forward(&mut g, &[x], None), Err(Error::Shape(_))));
    }

    #[test]
    fn lstm_gradients_match_finite_differences() {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let lstm = Lstm::new(&mut store, "lstm", 3, 4, 2, &mut rng);
        // larger weights exercise the nonlinearities
        let scaled: Vec<f64> = store.flatten().iter().map(|x| x * 10.0).collect();
        store.set_flat(&scaled).unwrap();
        let err = check_params(&store, |g| {
            let xs: Vec<Var> = (0..4).map(|i| g.input(&[0.5 * i as f64, -0.3, 0.8])).collect();
            lstm.forward(g, &xs, None).unwrap().0
        });
        assert!(err < 1e-3, "lstm rel err {err}");
    }

    #[test]
    fn char_cnn_shape_and_gradients() {
        let chars = char_vocabulary(["abc", "xyz"]);
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cnn = CharCnn::new(&mut store, "cnn", chars.len(), 20, &DEFAULT_CHAR_FILTERS, &mut rng);
        assert_eq!(cnn.output_dim(&store), 160);
        let ids = cnn.char_ids("a", &chars);
        assert_eq!(ids.len(), 6);
        assert_eq!(ids[0], crate::textprep::Vocabulary::PAD_ID);
        let mut g = Graph::new(&store);
        let out = cnn.forward(&mut g, &ids).unwrap();
        assert_eq!(g.value(out).len(), 160);

        let scaled: Vec<f64> = store.flatten().iter().map(|x| x * 10.0).collect();
        store.set_flat(&scaled).unwrap();
        let ids = cnn.char_ids("abcxa", &chars);
        let err = check_params(&store, |g| vec![cnn.forward(g, &ids).unwrap()]);
        assert!(err < 1e-3, "cnn rel err {err}");
    }

    #[test]
    fn forward_is_pure() {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let lstm = Lstm::new(&mut store, "lstm", 2, 3, 2, &mut rng);
        let run = || {
            let mut g = Graph::new(&store);
            let xs: Vec<Var> = (0..3).map(|i| g.input(&[i as f64, 0.5])).collect();
            let (outs, _) = lstm.forward(&mut g, &xs, None).unwrap();
            outs.iter().flat_map(|o| g.value(*o).to_vec()).collect::<Vec<f64>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn forget_bias_starts_at_one() {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let lstm = Lstm::new(&mut store, "lstm", 2, 3, 1, &mut rng);
        let b = &store.get(lstm.layers[0].gates.b).data;
        assert_eq!(b, &vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let w = &store.get(lstm.layers[0].gates.w).data;
        assert!(w.iter().all(|x| x.abs() < INIT_BOUND));
    }
}
