//! Two-hidden-layer ReLU perceptron trained by plain mini-batch SGD.
//!
//! Inputs are standardised with training moments; a continuous target is
//! standardised too and mapped back on prediction. The continuous head is a
//! single linear unit with mean squared error, the categorical head two
//! logits with softmax cross-entropy (column 1 = poor).

use rand::distr::{Distribution, Uniform};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{MlpParams, Target};
use crate::error::{Error, Result};
use crate::linalg::{gemm, Matrix};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    target: Target,
    inputs: usize,
    layer1: usize,
    layer2: usize,
    bias: bool,
    means: Vec<f64>,
    scales: Vec<f64>,
    y_mean: f64,
    y_scale: f64,
    /// W1 (inputs×layer1), b1, W2 (layer1×layer2), b2, W3 (layer2×outputs), b3,
    /// all row-major.
    params: Vec<f64>,
}

/// Outcome of [`train`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainReport {
    /// Training loss of the kept network (standardised scale for a continuous target).
    pub loss: f64,
    /// Training runs started, restarts included.
    pub attempts: usize,
}

/// Offsets of each tensor inside the flat parameter vector.
#[derive(Clone, Copy)]
struct Layout {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    w3: usize,
    b3: usize,
    len: usize,
}

/// Scratch buffers for one batch.
struct Workspace {
    h1: Vec<f64>,
    h2: Vec<f64>,
    out: Vec<f64>,
    d2: Vec<f64>,
    d1: Vec<f64>,
}

impl Workspace {
    fn new(net: &Network, rows: usize) -> Self {
        Workspace {
            h1: vec![0.0; rows * net.layer1],
            h2: vec![0.0; rows * net.layer2],
            out: vec![0.0; rows * net.outputs()],
            d2: vec![0.0; rows * net.layer2],
            d1: vec![0.0; rows * net.layer1],
        }
    }
}

fn add_bias(buf: &mut [f64], bias: &[f64]) {
    for row in buf.chunks_exact_mut(bias.len()) {
        for (v, b) in row.iter_mut().zip(bias) {
            *v += b;
        }
    }
}

fn relu(buf: &mut [f64]) {
    for v in buf {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

fn column_sums(buf: &[f64], cols: usize, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for row in buf.chunks_exact(cols) {
        for (o, v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
}

fn moments(x: &Matrix) -> (Vec<f64>, Vec<f64>) {
    let (n, p) = (x.rows(), x.cols());
    let mut means = vec![0.0; p];
    for r in 0..n {
        for (m, v) in means.iter_mut().zip(x.row(r)) {
            *m += v / n as f64;
        }
    }
    let mut scales = vec![0.0; p];
    for r in 0..n {
        for ((s, v), m) in scales.iter_mut().zip(x.row(r)).zip(&means) {
            *s += (v - m) * (v - m) / n as f64;
        }
    }
    for s in &mut scales {
        *s = if *s > 0.0 { s.sqrt() } else { 1.0 };
    }
    (means, scales)
}

impl Network {
    fn outputs(&self) -> usize {
        match self.target {
            Target::Continuous => 1,
            Target::Categorical => 2,
        }
    }

    fn layout(&self) -> Layout {
        let (p, h1, h2, o) = (self.inputs, self.layer1, self.layer2, self.outputs());
        let w1 = 0;
        let b1 = w1 + p * h1;
        let w2 = b1 + h1;
        let b2 = w2 + h1 * h2;
        let w3 = b2 + h2;
        let b3 = w3 + h2 * o;
        Layout {
            w1,
            b1,
            w2,
            b2,
            w3,
            b3,
            len: b3 + o,
        }
    }

    /// Fresh network with uniform weights of variance `1/fan_in` and zero biases.
    /// Standardisation moments are taken from `x` and `y`.
    pub fn init(x: &Matrix, y: &[f64], target: Target, layer1: usize, layer2: usize, bias: bool, seed: u64) -> Self {
        let (means, scales) = moments(x);
        let (y_mean, y_scale) = match target {
            Target::Continuous => {
                let n = y.len() as f64;
                let m = y.iter().sum::<f64>() / n;
                let v = y.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
                (m, if v > 0.0 { v.sqrt() } else { 1.0 })
            }
            Target::Categorical => (0.0, 1.0),
        };
        let mut net = Network {
            target,
            inputs: x.cols(),
            layer1,
            layer2,
            bias,
            means,
            scales,
            y_mean,
            y_scale,
            params: Vec::new(),
        };
        let l = net.layout();
        net.params = vec![0.0; l.len];
        let mut rng = rng::stream(seed);
        let o = net.outputs();
        for (start, fan_in, count) in [
            (l.w1, net.inputs, net.inputs * layer1),
            (l.w2, layer1, layer1 * layer2),
            (l.w3, layer2, layer2 * o),
        ] {
            let a = (3.0 / fan_in.max(1) as f64).sqrt();
            let dist = Uniform::new_inclusive(-a, a).expect("finite bound");
            for w in &mut net.params[start..start + count] {
                *w = dist.sample(&mut rng);
            }
        }
        net
    }

    pub fn target(&self) -> Target {
        self.target
    }

    pub fn parameters(&self) -> &[f64] {
        &self.params
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::Alignment {
                expected: self.params.len(),
                found: params.len(),
            });
        }
        self.params.copy_from_slice(params);
        Ok(())
    }

    fn standardize(&self, x: &Matrix) -> Vec<f64> {
        let mut z = x.as_slice().to_vec();
        for row in z.chunks_exact_mut(self.inputs) {
            for ((v, m), s) in row.iter_mut().zip(&self.means).zip(&self.scales) {
                *v = (*v - m) / s;
            }
        }
        z
    }

    fn scale_target(&self, y: &[f64]) -> Vec<f64> {
        y.iter().map(|v| (v - self.y_mean) / self.y_scale).collect()
    }

    /// Forward pass over `rows` standardised inputs; fills `ws.h1`, `ws.h2`
    /// (post-activation) and `ws.out` (pre-softmax).
    fn forward(&self, z: &[f64], rows: usize, ws: &mut Workspace) {
        let l = self.layout();
        let (p, h1, h2, o) = (self.inputs, self.layer1, self.layer2, self.outputs());
        let w = &self.params;
        let (a1, a2, out) = (
            &mut ws.h1[..rows * h1],
            &mut ws.h2[..rows * h2],
            &mut ws.out[..rows * o],
        );
        gemm(rows, p, h1, 1.0, z, false, &w[l.w1..l.b1], false, 0.0, a1);
        add_bias(a1, &w[l.b1..l.w2]);
        relu(a1);
        gemm(rows, h1, h2, 1.0, a1, false, &w[l.w2..l.b2], false, 0.0, a2);
        add_bias(a2, &w[l.b2..l.w3]);
        relu(a2);
        gemm(rows, h2, o, 1.0, a2, false, &w[l.w3..l.b3], false, 0.0, out);
        add_bias(out, &w[l.b3..l.len]);
    }

    /// Mean loss of the current forward pass; overwrites `ws.out` with
    /// `∂loss/∂output` when `want_grad` is set.
    fn head(&self, t: &[f64], rows: usize, ws: &mut Workspace, want_grad: bool) -> f64 {
        let inv = 1.0 / rows as f64;
        match self.target {
            Target::Continuous => {
                let mut loss = 0.0;
                for (o, y) in ws.out[..rows].iter_mut().zip(t) {
                    let e = *o - y;
                    loss += e * e;
                    if want_grad {
                        *o = 2.0 * e * inv;
                    }
                }
                loss * inv
            }
            Target::Categorical => {
                let mut loss = 0.0;
                for (o, y) in ws.out[..2 * rows].chunks_exact_mut(2).zip(t) {
                    let m = o[0].max(o[1]);
                    let lse = m + ((o[0] - m).exp() + (o[1] - m).exp()).ln();
                    let k = if *y == 1.0 { 1 } else { 0 };
                    loss += lse - o[k];
                    if want_grad {
                        let p1 = (o[1] - lse).exp();
                        let p0 = (o[0] - lse).exp();
                        o[0] = (p0 - if k == 0 { 1.0 } else { 0.0 }) * inv;
                        o[1] = (p1 - if k == 1 { 1.0 } else { 0.0 }) * inv;
                    }
                }
                loss * inv
            }
        }
    }

    /// Loss and gradient over one batch of standardised rows.
    fn batch_gradient(&self, z: &[f64], t: &[f64], ws: &mut Workspace, grad: &mut [f64]) -> f64 {
        let rows = t.len();
        let l = self.layout();
        let (p, h1, h2, o) = (self.inputs, self.layer1, self.layer2, self.outputs());
        self.forward(z, rows, ws);
        let loss = self.head(t, rows, ws, true);
        let w = &self.params;
        let dout = &ws.out[..rows * o];
        let a2 = &ws.h2[..rows * h2];
        let a1 = &ws.h1[..rows * h1];

        gemm(h2, rows, o, 1.0, a2, true, dout, false, 0.0, &mut grad[l.w3..l.b3]);
        column_sums(dout, o, &mut grad[l.b3..l.len]);

        let d2 = &mut ws.d2[..rows * h2];
        gemm(rows, o, h2, 1.0, dout, false, &w[l.w3..l.b3], true, 0.0, d2);
        for (d, a) in d2.iter_mut().zip(a2) {
            if *a <= 0.0 {
                *d = 0.0;
            }
        }
        gemm(h1, rows, h2, 1.0, a1, true, d2, false, 0.0, &mut grad[l.w2..l.b2]);
        column_sums(d2, h2, &mut grad[l.b2..l.w3]);

        let d1 = &mut ws.d1[..rows * h1];
        gemm(rows, h2, h1, 1.0, d2, false, &w[l.w2..l.b2], true, 0.0, d1);
        for (d, a) in d1.iter_mut().zip(a1) {
            if *a <= 0.0 {
                *d = 0.0;
            }
        }
        gemm(p, rows, h1, 1.0, z, true, d1, false, 0.0, &mut grad[l.w1..l.b1]);
        column_sums(d1, h1, &mut grad[l.b1..l.w2]);

        if !self.bias {
            for r in [l.b1..l.w2, l.b2..l.w3, l.b3..l.len] {
                grad[r].iter_mut().for_each(|g| *g = 0.0);
            }
        }
        loss
    }

    fn loss_standardized(&self, z: &[f64], t: &[f64]) -> f64 {
        let mut ws = Workspace::new(self, t.len());
        self.forward(z, t.len(), &mut ws);
        self.head(t, t.len(), &mut ws, false)
    }

    /// Mean training loss on `(x, y)`, with `y` on its original scale.
    pub fn loss(&self, x: &Matrix, y: &[f64]) -> f64 {
        self.loss_standardized(&self.standardize(x), &self.scale_target(y))
    }

    /// Loss and its analytic gradient with respect to [`Network::parameters`].
    pub fn loss_and_gradient(&self, x: &Matrix, y: &[f64]) -> (f64, Vec<f64>) {
        let z = self.standardize(x);
        let t = self.scale_target(y);
        let mut ws = Workspace::new(self, t.len());
        let mut grad = vec![0.0; self.params.len()];
        let loss = self.batch_gradient(&z, &t, &mut ws, &mut grad);
        (loss, grad)
    }

    /// Log income (continuous) or probability of being poor (categorical).
    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        let z = self.standardize(x);
        let rows = x.rows();
        let mut ws = Workspace::new(self, rows);
        self.forward(&z, rows, &mut ws);
        match self.target {
            Target::Continuous => ws.out.iter().map(|o| o * self.y_scale + self.y_mean).collect(),
            Target::Categorical => ws
                .out
                .chunks_exact(2)
                .map(|o| 1.0 / (1.0 + (o[0] - o[1]).exp()))
                .collect(),
        }
    }
}

/// One SGD run from a fresh initialisation. Returns `None` on divergence.
fn run_once(net: &mut Network, z: &[f64], t: &[f64], params: &MlpParams, seed: u64) -> Option<f64> {
    let (n, p) = (t.len(), net.inputs);
    let batch = params.batch_size.min(n);
    let mut ws = Workspace::new(net, batch);
    let mut grad = vec![0.0; net.params.len()];
    let mut zb = vec![0.0; batch * p];
    let mut tb = vec![0.0; batch];
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rng::stream(seed);
    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            let rows = chunk.len();
            for (k, &i) in chunk.iter().enumerate() {
                zb[k * p..(k + 1) * p].copy_from_slice(&z[i * p..(i + 1) * p]);
                tb[k] = t[i];
            }
            let loss = net.batch_gradient(&zb[..rows * p], &tb[..rows], &mut ws, &mut grad);
            if !loss.is_finite() {
                return None;
            }
            for (w, g) in net.params.iter_mut().zip(&grad) {
                *w -= params.learning_rate * g;
            }
        }
    }
    let loss = net.loss_standardized(z, t);
    loss.is_finite().then_some(loss)
}

/// Trains from up to `1 + max_restarts` initialisations. A restart happens
/// only when a run diverges or ends no better than it started; the network
/// with the lowest training loss is kept.
pub fn train(x: &Matrix, y: &[f64], target: Target, params: &MlpParams, seed: u64) -> Result<(Network, TrainReport)> {
    if params.layer1 == 0 || params.layer2 == 0 || params.batch_size == 0 {
        return Err(Error::Spec("MLP layers and batch size must be positive".into()));
    }
    if !(params.learning_rate > 0.0 && params.learning_rate.is_finite()) {
        return Err(Error::Domain {
            name: "learning_rate",
            value: params.learning_rate,
            domain: "(0, ∞)",
        });
    }
    let mut best: Option<(Network, f64)> = None;
    let mut attempts = 0;
    for attempt in 0..=params.max_restarts {
        attempts += 1;
        let init_seed = rng::derive(seed, 2 * attempt as u64);
        let mut net = Network::init(x, y, target, params.layer1, params.layer2, params.bias, init_seed);
        let z = net.standardize(x);
        let t = net.scale_target(y);
        let initial = net.loss_standardized(&z, &t);
        let outcome = run_once(&mut net, &z, &t, params, rng::derive(seed, 2 * attempt as u64 + 1));
        match outcome {
            Some(loss) => {
                if best.as_ref().is_none_or(|(_, b)| loss < *b) {
                    best = Some((net, loss));
                }
                if loss < initial {
                    break;
                }
                log::debug!("MLP attempt {attempt} ended at loss {loss} ≥ initial {initial}; restarting");
            }
            None => log::debug!("MLP attempt {attempt} diverged; restarting"),
        }
    }
    match best {
        Some((net, loss)) => Ok((net, TrainReport { loss, attempts })),
        None => Err(Error::State(format!(
            "MLP diverged in all {attempts} attempts (learning rate {})",
            params.learning_rate
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture(target: Target) -> (Matrix, Vec<f64>) {
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|i| vec![(i as f64 * 0.7).sin() * 3.0, (i % 3) as f64, 40.0 + 2.0 * i as f64])
            .collect();
        let y = (0..10)
            .map(|i| match target {
                Target::Continuous => 9.0 + (i as f64 * 1.3).cos(),
                Target::Categorical => (i % 3 == 0) as u8 as f64,
            })
            .collect();
        (Matrix::from_rows(&rows).unwrap(), y)
    }

    fn check_gradient(target: Target) {
        let (x, y) = fixture(target);
        let mut net = Network::init(&x, &y, target, 6, 5, true, 17);
        // Nonzero biases so their gradients are exercised too.
        let mut w = net.parameters().to_vec();
        for (k, v) in w.iter_mut().enumerate() {
            *v += 0.05 * ((k * 7 % 11) as f64 - 5.0) / 5.0;
        }
        net.set_parameters(&w).unwrap();
        let (_, grad) = net.loss_and_gradient(&x, &y);
        let h = 1e-5;
        for k in 0..w.len() {
            let mut plus = net.clone();
            let mut minus = net.clone();
            let (mut wp, mut wm) = (w.clone(), w.clone());
            wp[k] += h;
            wm[k] -= h;
            plus.set_parameters(&wp).unwrap();
            minus.set_parameters(&wm).unwrap();
            let fd = (plus.loss(&x, &y) - minus.loss(&x, &y)) / (2.0 * h);
            let rel = (fd - grad[k]).abs() / fd.abs().max(grad[k].abs()).max(1e-6);
            assert!(rel < 1e-4, "param {k}: analytic {} vs numeric {fd}", grad[k]);
        }
    }

    #[test]
    fn gradient_matches_finite_differences_mse() {
        check_gradient(Target::Continuous);
    }

    #[test]
    fn gradient_matches_finite_differences_softmax() {
        check_gradient(Target::Categorical);
    }

    #[test]
    fn training_reduces_loss() {
        let (x, y) = fixture(Target::Continuous);
        let params = MlpParams {
            layer1: 8,
            layer2: 8,
            learning_rate: 0.05,
            batch_size: 5,
            epochs: 200,
            max_restarts: 2,
            bias: true,
        };
        let init = Network::init(&x, &y, Target::Continuous, 8, 8, true, rng::derive(3, 0));
        let (net, report) = train(&x, &y, Target::Continuous, &params, 3).unwrap();
        assert!(report.loss < init.loss(&x, &y));
        assert!((net.loss(&x, &y) - report.loss).abs() < 1e-12);
    }

    #[test]
    fn no_bias_keeps_biases_at_zero() {
        let (x, y) = fixture(Target::Categorical);
        let params = MlpParams {
            layer1: 4,
            layer2: 3,
            learning_rate: 0.1,
            batch_size: 4,
            epochs: 20,
            max_restarts: 0,
            bias: false,
        };
        let (net, _) = train(&x, &y, Target::Categorical, &params, 1).unwrap();
        let l = net.layout();
        assert!(net.params[l.b1..l.w2].iter().all(|b| *b == 0.0));
        assert!(net.params[l.b3..l.len].iter().all(|b| *b == 0.0));
        assert!(net.predict(&x).iter().all(|p| (0.0..=1.0).contains(p)));
    }
}
