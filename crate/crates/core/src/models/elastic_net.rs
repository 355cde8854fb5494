//! Elastic net by cyclic coordinate descent over a log-spaced penalty path,
//! with k-fold cross-validation choosing the penalty.
//!
//! Covariates are standardised with training moments (population sd). The
//! penalised objective on the standardised scale is
//!
//! ```text
//! L(β₀, β) + λ · ((1 − α)/2 · ‖β‖² + α · ‖β‖₁)
//! ```
//!
//! with `L` the half mean squared error (continuous target) or the mean
//! negative log-likelihood (categorical target, solved by penalised IRLS).

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{logistic, ElasticNetParams, Target};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng;

/// Ratio between the smallest and largest penalty of the grid.
const LAMBDA_MIN_RATIO: f64 = 1e-4;
/// Floor on α when sizing the grid, so a ridge path still starts somewhere finite.
const ALPHA_FLOOR: f64 = 1e-3;
const CD_TOL: f64 = 1e-13;
const CD_MAX_SWEEPS: usize = 1_000_000;
const IRLS_TOL: f64 = 1e-10;
const IRLS_MAX_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElasticNetModel {
    target: Target,
    alpha: f64,
    means: Vec<f64>,
    scales: Vec<f64>,
    /// Penalty grid, largest first.
    lambdas: Vec<f64>,
    /// Standardised-scale coefficients per grid point, intercept first.
    path: Vec<Vec<f64>>,
    /// Mean held-out deviance per grid point (empty for a fixed penalty).
    cv_deviance: Vec<f64>,
    selected: usize,
    converged: bool,
    iterations: usize,
}

/// Standardised design plus the moments used.
struct Standardized {
    z: Matrix,
    means: Vec<f64>,
    scales: Vec<f64>,
}

fn standardize(x: &Matrix) -> Standardized {
    let (n, p) = (x.rows(), x.cols());
    let mut means = vec![0.0; p];
    for r in 0..n {
        for (m, v) in means.iter_mut().zip(x.row(r)) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0; p];
    for r in 0..n {
        for ((s, v), m) in var.iter_mut().zip(x.row(r)).zip(&means) {
            *s += (v - m) * (v - m);
        }
    }
    // Constant columns keep scale 1 and standardise to zero.
    let scales: Vec<f64> = var
        .iter()
        .map(|s| {
            let sd = (s / n as f64).sqrt();
            if sd > 0.0 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    let z = apply_standardization(x, &means, &scales);
    Standardized { z, means, scales }
}

fn apply_standardization(x: &Matrix, means: &[f64], scales: &[f64]) -> Matrix {
    let mut z = x.clone();
    for r in 0..z.rows() {
        for ((v, m), s) in z.row_mut(r).iter_mut().zip(means).zip(scales) {
            *v = (*v - m) / s;
        }
    }
    z
}

#[inline]
fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Coordinate descent on the quadratic `½ bᵀ G b − cᵀ b + penalty(b[1..])`,
/// where `b[0]` is an unpenalised intercept. Returns the number of sweeps and
/// whether the tolerance was met.
fn cd_quadratic(g: &[f64], c: &[f64], lambda: f64, alpha: f64, b: &mut [f64]) -> (usize, bool) {
    let q = b.len();
    let l1 = lambda * alpha;
    let l2 = lambda * (1.0 - alpha);
    for sweep in 1..=CD_MAX_SWEEPS {
        let mut max_delta: f64 = 0.0;
        for j in 0..q {
            let gjj = g[j * q + j];
            if gjj <= 0.0 {
                b[j] = 0.0;
                continue;
            }
            let row = &g[j * q..(j + 1) * q];
            let partial: f64 = c[j] - row.iter().zip(b.iter()).map(|(gk, bk)| gk * bk).sum::<f64>() + gjj * b[j];
            let new = if j == 0 {
                partial / gjj
            } else {
                soft_threshold(partial, l1) / (gjj + l2)
            };
            max_delta = max_delta.max((new - b[j]).abs());
            b[j] = new;
        }
        if max_delta < CD_TOL {
            return (sweep, true);
        }
    }
    (CD_MAX_SWEEPS, false)
}

/// `[1 Z]ᵀ W [1 Z] / n` and `[1 Z]ᵀ W t / n`.
fn weighted_gram(z: &Matrix, w: &[f64], t: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (n, p) = (z.rows(), z.cols());
    let q = p + 1;
    let mut g = vec![0.0; q * q];
    let mut c = vec![0.0; q];
    let mut row = vec![0.0; q];
    for i in 0..n {
        row[0] = 1.0;
        row[1..].copy_from_slice(z.row(i));
        let wi = w[i];
        for a in 0..q {
            let wa = wi * row[a];
            c[a] += wa * t[i];
            for bcol in a..q {
                g[a * q + bcol] += wa * row[bcol];
            }
        }
    }
    for a in 0..q {
        for bcol in 0..a {
            g[a * q + bcol] = g[bcol * q + a];
        }
    }
    let inv = 1.0 / n as f64;
    g.iter_mut().for_each(|v| *v *= inv);
    c.iter_mut().for_each(|v| *v *= inv);
    (g, c)
}

fn linear_predictor(z: &Matrix, b: &[f64]) -> Vec<f64> {
    (0..z.rows())
        .map(|r| b[0] + z.row(r).iter().zip(&b[1..]).map(|(x, w)| x * w).sum::<f64>())
        .collect()
}

fn penalty(b: &[f64], lambda: f64, alpha: f64) -> f64 {
    b[1..]
        .iter()
        .map(|v| lambda * (0.5 * (1.0 - alpha) * v * v + alpha * v.abs()))
        .sum()
}

fn logistic_objective(z: &Matrix, y: &[f64], b: &[f64], lambda: f64, alpha: f64) -> f64 {
    let eta = linear_predictor(z, b);
    let nll: f64 = eta
        .iter()
        .zip(y)
        .map(|(&e, &yi)| {
            let log1pexp = if e > 0.0 {
                e + (-e).exp().ln_1p()
            } else {
                e.exp().ln_1p()
            };
            log1pexp - yi * e
        })
        .sum();
    nll / y.len() as f64 + penalty(b, lambda, alpha)
}

struct PathFit {
    path: Vec<Vec<f64>>,
    iterations: usize,
    converged: bool,
}

/// Warm-started fits along `lambdas` on standardised data.
fn fit_path(z: &Matrix, y: &[f64], target: Target, lambdas: &[f64], alpha: f64) -> PathFit {
    let (n, p) = (z.rows(), z.cols());
    let q = p + 1;
    let mut b = vec![0.0; q];
    b[0] = y.iter().sum::<f64>() / n as f64;
    if target == Target::Categorical {
        let ybar = b[0].clamp(1e-12, 1.0 - 1e-12);
        b[0] = (ybar / (1.0 - ybar)).ln();
    }
    let mut path = Vec::with_capacity(lambdas.len());
    let mut iterations = 0;
    let mut converged = true;

    match target {
        Target::Continuous => {
            let (g, c) = weighted_gram(z, &vec![1.0; n], y);
            for &lambda in lambdas {
                let (sweeps, ok) = cd_quadratic(&g, &c, lambda, alpha, &mut b);
                iterations += sweeps;
                converged &= ok;
                path.push(b.clone());
            }
        }
        Target::Categorical => {
            for &lambda in lambdas {
                let mut obj = logistic_objective(z, y, &b, lambda, alpha);
                let mut ok = false;
                for _ in 0..IRLS_MAX_ITER {
                    iterations += 1;
                    let eta = linear_predictor(z, &b);
                    let mut w = vec![0.0; n];
                    let mut t = vec![0.0; n];
                    for i in 0..n {
                        let pi = logistic(eta[i]);
                        w[i] = (pi * (1.0 - pi)).max(1e-10);
                        t[i] = eta[i] + (y[i] - pi) / w[i];
                    }
                    let (g, c) = weighted_gram(z, &w, &t);
                    let mut cand = b.clone();
                    cd_quadratic(&g, &c, lambda, alpha, &mut cand);
                    // Damped step if the Newton proposal overshoots.
                    let mut step = 1.0;
                    let mut next = cand.clone();
                    let mut next_obj = logistic_objective(z, y, &next, lambda, alpha);
                    while next_obj > obj + 1e-15 * obj.abs() && step > 1e-8 {
                        step *= 0.5;
                        next = b.iter().zip(&cand).map(|(o, c)| o + step * (c - o)).collect();
                        next_obj = logistic_objective(z, y, &next, lambda, alpha);
                    }
                    let delta = b.iter().zip(&next).map(|(o, v)| (o - v).abs()).fold(0.0, f64::max);
                    b = next;
                    obj = next_obj;
                    if delta < IRLS_TOL {
                        ok = true;
                        break;
                    }
                }
                converged &= ok;
                path.push(b.clone());
            }
        }
    }
    PathFit {
        path,
        iterations,
        converged,
    }
}

/// Smallest penalty that keeps every coefficient at zero (with α floored).
fn lambda_max(z: &Matrix, y: &[f64], alpha: f64) -> f64 {
    let n = y.len() as f64;
    let ybar = y.iter().sum::<f64>() / n;
    let centered: Vec<f64> = y.iter().map(|v| v - ybar).collect();
    let grad = z.tr_mul_vec(&centered);
    let max = grad.iter().map(|g| g.abs() / n).fold(0.0, f64::max);
    // small margin so round-off in the Gram sums cannot leave a stray coefficient at the top
    max / alpha.max(ALPHA_FLOOR) * (1.0 + 1e-9)
}

fn lambda_grid(max: f64, size: usize) -> Vec<f64> {
    if size == 1 {
        return vec![max];
    }
    (0..size)
        .map(|k| max * LAMBDA_MIN_RATIO.powf(k as f64 / (size - 1) as f64))
        .collect()
}

fn deviance(target: Target, eta: &[f64], y: &[f64]) -> f64 {
    let n = y.len() as f64;
    match target {
        Target::Continuous => eta.iter().zip(y).map(|(e, v)| (v - e).powi(2)).sum::<f64>() / n,
        Target::Categorical => {
            -2.0 * eta
                .iter()
                .zip(y)
                .map(|(&e, &v)| {
                    let p = logistic(e).clamp(1e-15, 1.0 - 1e-15);
                    v * p.ln() + (1.0 - v) * (1.0 - p).ln()
                })
                .sum::<f64>()
                / n
        }
    }
}

impl ElasticNetModel {
    pub fn fit(x: &Matrix, y: &[f64], target: Target, params: &ElasticNetParams, seed: u64) -> Result<Self> {
        let alpha = params.alpha;
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Domain {
                name: "alpha",
                value: alpha,
                domain: "[0, 1]",
            });
        }
        let std = standardize(x);

        if let Some(lambda) = params.lambda {
            if !(lambda >= 0.0 && lambda.is_finite()) {
                return Err(Error::Domain {
                    name: "lambda",
                    value: lambda,
                    domain: "[0, ∞)",
                });
            }
            let fitted = fit_path(&std.z, y, target, &[lambda], alpha);
            return Ok(ElasticNetModel {
                target,
                alpha,
                means: std.means,
                scales: std.scales,
                lambdas: vec![lambda],
                path: fitted.path,
                cv_deviance: Vec::new(),
                selected: 0,
                converged: fitted.converged,
                iterations: fitted.iterations,
            });
        }

        if params.lambda_grid_size == 0 {
            return Err(Error::Spec("lambda grid must have at least one point".into()));
        }
        if params.cv_folds < 2 || params.cv_folds > x.rows() {
            return Err(Error::Spec(format!(
                "cv_folds must be in [2, {}], got {}",
                x.rows(),
                params.cv_folds
            )));
        }
        let lambdas = lambda_grid(lambda_max(&std.z, y, alpha), params.lambda_grid_size);

        // Fold assignment: shuffled rows dealt round-robin.
        let n = x.rows();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng::stream(seed));
        let mut fold_of = vec![0usize; n];
        for (k, &i) in order.iter().enumerate() {
            fold_of[i] = k % params.cv_folds;
        }

        let fold_dev: Vec<Vec<f64>> = (0..params.cv_folds)
            .into_par_iter()
            .map(|k| {
                let train: Vec<usize> = (0..n).filter(|&i| fold_of[i] != k).collect();
                let held: Vec<usize> = (0..n).filter(|&i| fold_of[i] == k).collect();
                let xt = x.select_rows(&train);
                let yt: Vec<f64> = train.iter().map(|&i| y[i]).collect();
                let s = standardize(&xt);
                let fitted = fit_path(&s.z, &yt, target, &lambdas, alpha);
                let zh = apply_standardization(&x.select_rows(&held), &s.means, &s.scales);
                let yh: Vec<f64> = held.iter().map(|&i| y[i]).collect();
                fitted
                    .path
                    .iter()
                    .map(|b| deviance(target, &linear_predictor(&zh, b), &yh))
                    .collect()
            })
            .collect();

        let cv_deviance: Vec<f64> = (0..lambdas.len())
            .map(|j| fold_dev.iter().map(|d| d[j]).sum::<f64>() / params.cv_folds as f64)
            .collect();
        let selected = cv_deviance
            .iter()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) },
            )
            .0;

        let fitted = fit_path(&std.z, y, target, &lambdas, alpha);
        Ok(ElasticNetModel {
            target,
            alpha,
            means: std.means,
            scales: std.scales,
            lambdas,
            path: fitted.path,
            cv_deviance,
            selected,
            converged: fitted.converged,
            iterations: fitted.iterations,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn selected_lambda(&self) -> f64 {
        self.lambdas[self.selected]
    }

    pub fn selected_index(&self) -> usize {
        self.selected
    }

    pub fn cv_deviance(&self) -> &[f64] {
        &self.cv_deviance
    }

    /// Standardised-scale coefficients (intercept first) at each grid point.
    pub fn path(&self) -> &[Vec<f64>] {
        &self.path
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Coefficients on the original covariate scale at the selected penalty,
    /// intercept first.
    pub fn coefficients(&self) -> Vec<f64> {
        let b = &self.path[self.selected];
        let slopes: Vec<f64> = b[1..].iter().zip(&self.scales).map(|(v, s)| v / s).collect();
        let intercept = b[0] - slopes.iter().zip(&self.means).map(|(v, m)| v * m).sum::<f64>();
        std::iter::once(intercept).chain(slopes).collect()
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        let z = apply_standardization(x, &self.means, &self.scales);
        let eta = linear_predictor(&z, &self.path[self.selected]);
        match self.target {
            Target::Continuous => eta,
            Target::Categorical => eta.into_iter().map(logistic).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_threshold_shrinks_toward_zero() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
        assert_eq!(soft_threshold(0.5, 1.0), 0.0);
    }

    #[test]
    fn grid_is_log_spaced_from_max() {
        let g = lambda_grid(2.0, 5);
        assert_eq!(g[0], 2.0);
        assert!((g[4] - 2.0e-4).abs() < 1e-15);
        let ratio = g[1] / g[0];
        for w in g.windows(2) {
            assert!((w[1] / w[0] - ratio).abs() < 1e-12);
        }
    }

    #[test]
    fn lambda_max_zeroes_the_lasso() {
        let rows: Vec<Vec<f64>> = (0..50).map(|i| vec![(i as f64).cos(), ((i * 3) % 7) as f64]).collect();
        let y: Vec<f64> = rows.iter().map(|r| 2.0 * r[0] - 0.5 * r[1]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let s = standardize(&x);
        let lm = lambda_max(&s.z, &y, 1.0);
        let at_max = fit_path(&s.z, &y, Target::Continuous, &[lm * 1.0001], 1.0);
        assert!(at_max.path[0][1..].iter().all(|v| *v == 0.0));
        let below = fit_path(&s.z, &y, Target::Continuous, &[lm * 0.9], 1.0);
        assert!(below.path[0][1..].iter().any(|v| *v != 0.0));
    }

    #[test]
    fn rejects_bad_alpha_and_folds() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let y = [0.0, 1.0, 2.0];
        let mut p = ElasticNetParams {
            alpha: 1.5,
            ..Default::default()
        };
        assert!(ElasticNetModel::fit(&x, &y, Target::Continuous, &p, 0).is_err());
        p.alpha = 0.5;
        p.cv_folds = 10;
        assert!(ElasticNetModel::fit(&x, &y, Target::Continuous, &p, 0).is_err());
    }
}
