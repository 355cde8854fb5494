use super::{Design, FitDiagnostics, Parameters};
use crate::error::Result;
use crate::linalg;

pub(super) fn fit(x: &Design, y: &[f64]) -> Result<(Parameters, FitDiagnostics)> {
    let a = x.x.with_intercept();
    let names: Vec<String> = std::iter::once("_cons".to_string())
        .chain(x.names.iter().cloned())
        .collect();
    let coefficients = linalg::least_squares(&a, y, &names)?;
    Ok((
        Parameters::Linear { coefficients },
        FitDiagnostics {
            converged: true,
            iterations: 1,
            ..Default::default()
        },
    ))
}

#[cfg(test)]
mod tests {
    use crate::error::Error;
    use crate::linalg::Matrix;
    use crate::models::*;

    fn spec(names: &[&str]) -> ModelSpec {
        ModelSpec {
            family: Family::Ols,
            target: Target::Continuous,
            hyper: HyperParams::default(),
            regressors: names.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn fitted_mean_equals_observed_mean() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![(i as f64 * 0.37).sin(), (i % 3) as f64]).collect();
        let y: Vec<f64> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| 1.0 + 2.0 * r[0] - r[1] + 0.1 * ((i * 7) % 5) as f64)
            .collect();
        let x = Design::new(vec!["a".into(), "b".into()], Matrix::from_rows(&rows).unwrap()).unwrap();
        let m = fit(&spec(&["a", "b"]), &x, &y).unwrap();
        let yhat = predict(&m, &x).unwrap();
        let d = crate::linalg::mean(&yhat) - crate::linalg::mean(&y);
        assert!(d.abs() < 1e-10);
        let r = m.train_residuals.as_ref().unwrap();
        assert!(crate::linalg::mean(r).abs() < 1e-10);
    }

    #[test]
    fn duplicated_column_is_singular() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let x = Design::new(vec!["a".into(), "b".into()], Matrix::from_rows(&rows).unwrap()).unwrap();
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        match fit(&spec(&["a", "b"]), &x, &y) {
            Err(Error::Singular { column }) => assert_eq!(column, "b"),
            other => panic!("expected singularity, got {other:?}"),
        }
    }
}
