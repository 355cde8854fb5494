//! Logistic regression by iteratively reweighted least squares.

use super::{logistic, Design, FitDiagnostics, LogitParams, Parameters};
use crate::error::Result;
use crate::linalg::{self, Matrix};

/// Linear predictor beyond which a probability is numerically 0 or 1.
const SATURATED_ETA: f64 = 30.0;

fn log_likelihood(eta: &[f64], y: &[f64]) -> f64 {
    eta.iter()
        .zip(y)
        .map(|(&e, &yi)| {
            // log σ(e) = -log(1 + e^{-e})
            let log1pexp = if e > 0.0 {
                e + (-e).exp().ln_1p()
            } else {
                e.exp().ln_1p()
            };
            yi * e - log1pexp
        })
        .sum()
}

pub(super) fn fit(x: &Design, y: &[f64], params: &LogitParams) -> Result<(Parameters, FitDiagnostics)> {
    let a = x.x.with_intercept();
    let (n, p) = (a.rows(), a.cols());
    let names: Vec<String> = std::iter::once("_cons".to_string())
        .chain(x.names.iter().cloned())
        .collect();

    let mut beta = vec![0.0; p];
    let mut eta = vec![0.0; n];
    let mut ll = log_likelihood(&eta, y);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < params.max_iter {
        let prob: Vec<f64> = eta.iter().map(|&e| logistic(e)).collect();
        let resid: Vec<f64> = y.iter().zip(&prob).map(|(yi, pi)| yi - pi).collect();
        let score = a.tr_mul_vec(&resid);
        if score.iter().all(|s| s.abs() < params.tol) {
            converged = true;
            break;
        }
        iterations += 1;

        // Newton step: min ||√W (A δ) − (y − p)/√W||.
        let mut wa = Matrix::zeros(n, p);
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            let w = (prob[i] * (1.0 - prob[i])).max(1e-12);
            let sw = w.sqrt();
            for (dst, src) in wa.row_mut(i).iter_mut().zip(a.row(i)) {
                *dst = src * sw;
            }
            rhs[i] = resid[i] / sw;
        }
        let step = linalg::least_squares(&wa, &rhs, &names)?;

        // Step halving keeps the likelihood non-decreasing.
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + t * s).collect();
            let trial_eta = a.mul_vec(&trial);
            let trial_ll = log_likelihood(&trial_eta, y);
            if trial_ll >= ll - 1e-12 * ll.abs() || t < 1e-6 {
                beta = trial;
                eta = trial_eta;
                ll = trial_ll;
                break;
            }
            t *= 0.5;
        }
    }

    // Under separation the score also vanishes, but only because fitted
    // probabilities saturate at 0 or 1; that is not a usable optimum.
    if eta.iter().any(|e| e.abs() >= SATURATED_ETA) {
        converged = false;
    }
    if !converged {
        log::warn!(
            "logit did not converge after {iterations} iterations (possible separation); keeping the final iterate"
        );
    }
    let ybar = linalg::mean(y);
    let ll0 = n as f64 * (ybar * ybar.ln() + (1.0 - ybar) * (1.0 - ybar).ln());
    Ok((
        Parameters::Logit { coefficients: beta },
        FitDiagnostics {
            r2: Some(1.0 - ll / ll0),
            iterations,
            converged,
            training_loss: Some(-ll / n as f64),
        },
    ))
}

#[cfg(test)]
mod tests {
    use crate::linalg::Matrix;
    use crate::models::*;
    use rand::Rng;

    fn spec() -> ModelSpec {
        ModelSpec {
            family: Family::Logit,
            target: Target::Categorical,
            hyper: HyperParams::default(),
            regressors: vec!["a".into(), "b".into()],
        }
    }

    #[test]
    fn score_vanishes_at_convergence() {
        let mut rng = crate::rng::stream(5);
        let n = 400;
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let a: f64 = rng.random_range(-2.0..2.0);
            let b: f64 = if rng.random::<f64>() < 0.4 { 1.0 } else { 0.0 };
            let p = logistic(0.3 + 1.1 * a - 0.8 * b);
            y.push(if rng.random::<f64>() < p { 1.0 } else { 0.0 });
            rows.push(vec![a, b]);
        }
        let x = Design::new(vec!["a".into(), "b".into()], Matrix::from_rows(&rows).unwrap()).unwrap();
        let m = fit(&spec(), &x, &y).unwrap();
        assert!(m.diagnostics.converged);
        let p = predict(&m, &x).unwrap();
        let resid: Vec<f64> = y.iter().zip(&p).map(|(a, b)| a - b).collect();
        for s in x.x.with_intercept().tr_mul_vec(&resid) {
            assert!(s.abs() < 1e-8, "score {s}");
        }
        assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn separation_is_flagged_not_fatal() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i % 2) as f64]).collect();
        let y: Vec<f64> = (0..20).map(|i| if i < 10 { 1.0 } else { 0.0 }).collect();
        let x = Design::new(vec!["a".into(), "b".into()], Matrix::from_rows(&rows).unwrap()).unwrap();
        let mut s = spec();
        s.hyper.logit.max_iter = 30;
        let m = fit(&s, &x, &y).unwrap();
        assert!(!m.diagnostics.converged);
        let p = predict(&m, &x).unwrap();
        assert!(p[0] > 0.99 && p[19] < 0.01);
    }

    #[test]
    fn intercept_only_model_gives_constant_probability() {
        let c: f64 = -0.7;
        let m = FittedModel {
            spec: spec(),
            parameters: Parameters::Logit {
                coefficients: vec![c, 0.0, 0.0],
            },
            train_residuals: None,
            diagnostics: FitDiagnostics::default(),
        };
        let x = Design::new(
            vec!["a".into(), "b".into()],
            Matrix::from_rows(&[vec![3.0, 1.0], vec![-9.0, 0.0]]).unwrap(),
        )
        .unwrap();
        for p in predict(&m, &x).unwrap() {
            assert!((p - 1.0 / (1.0 + (-c).exp())).abs() < 1e-15);
        }
    }
}
