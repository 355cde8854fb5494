use povbench::dataset::{synthesize, Coefficients, Covariate, GeneratorConfig};
use povbench::linalg::Matrix;
use povbench::models::elastic_net::ElasticNetModel;
use povbench::models::forest::{Forest, Node};
use povbench::models::mlp::train;
use povbench::models::{
    fit, predict, Design, ElasticNetParams, Family, FittedModel, ForestParams, HyperParams, MlpParams, ModelCode,
    ModelSpec, Parameters, Target,
};
use povbench::Error;

fn survey(n: usize, seed: u64) -> (povbench::dataset::Dataset, Design, Vec<f64>) {
    let ds = synthesize(&GeneratorConfig::baseline(n, seed)).unwrap();
    let idx: Vec<usize> = (0..n).collect();
    let x = Design::from_dataset(&ds, &Covariate::ALL, &idx);
    let y = ds.log_incomes();
    (ds, x, y)
}

fn poor_flags(y: &[f64]) -> Vec<f64> {
    let mut s = y.to_vec();
    s.sort_by(f64::total_cmp);
    let med = s[s.len() / 2];
    y.iter().map(|&v| (v <= med) as u8 as f64).collect()
}

#[test]
fn ols_recovers_noiseless_coefficients() {
    let mut cfg = GeneratorConfig::baseline(1500, 3);
    cfg.noise_sd = 0.0;
    let ds = synthesize(&cfg).unwrap();
    let idx: Vec<usize> = (0..ds.len()).collect();
    let covs = Covariate::ALL;
    let m = fit(
        &ModelSpec::new(ModelCode::Wcn, &covs),
        &Design::from_dataset(&ds, &covs, &idx),
        &ds.log_incomes(),
    )
    .unwrap();
    let Parameters::Linear { coefficients } = &m.parameters else {
        panic!("linear parameters expected")
    };
    let truth = Coefficients::baseline();
    assert!((coefficients[0] - truth.intercept).abs() < 1e-8);
    for (c, b) in covs.iter().zip(&coefficients[1..]) {
        assert!((b - truth.beta(*c)).abs() < 1e-8, "{c}: {b} vs {}", truth.beta(*c));
    }
    assert!((m.diagnostics.r2.unwrap() - 1.0).abs() < 1e-10);
}

#[test]
fn logit_solves_its_score_equations() {
    let (_, x, y) = survey(2000, 4);
    let yc = poor_flags(&y);
    let m = fit(&ModelSpec::new(ModelCode::Pct, &Covariate::ALL), &x, &yc).unwrap();
    assert!(m.diagnostics.converged);
    let p = predict(&m, &x).unwrap();
    let a = x.x.with_intercept();
    let score = a.tr_mul_vec(&yc.iter().zip(&p).map(|(t, q)| t - q).collect::<Vec<_>>());
    for s in score {
        assert!(s.abs() / 2000.0 < 1e-6, "score component {s}");
    }
}

#[test]
fn categorical_target_needs_both_classes() {
    let (_, x, _) = survey(200, 1);
    let ones = vec![1.0; 200];
    for code in [ModelCode::Pct, ModelCode::Rct, ModelCode::Ect, ModelCode::Nct] {
        let err = fit(&ModelSpec::new(code, &Covariate::ALL), &x, &ones).unwrap_err();
        assert!(matches!(err, Error::DegenerateTarget(_)), "{code}: {err}");
    }
}

#[test]
fn design_must_match_regressors() {
    let (_, x, y) = survey(100, 1);
    let spec = ModelSpec::new(ModelCode::Wcn, &Covariate::ALL[..3]);
    assert!(matches!(fit(&spec, &x, &y), Err(Error::Schema(_))));
}

#[test]
fn codes_map_to_family_and_target() {
    for code in ModelCode::ALL {
        assert_eq!(ModelCode::from_parts(code.family(), code.target()).unwrap(), code);
        assert_eq!(code.as_str().parse::<ModelCode>().unwrap(), code);
    }
    assert!(ModelCode::from_parts(Family::Ols, Target::Categorical).is_err());
    assert!("xyz".parse::<ModelCode>().is_err());
}

#[test]
fn hyperparameters_set_by_name() {
    let mut h = HyperParams::default();
    h.set("rf.trees", 7.0).unwrap();
    h.set("en.alpha", 0.4).unwrap();
    h.set("mlp.learning_rate", 0.02).unwrap();
    assert_eq!((h.rf.trees, h.en.alpha, h.mlp.learning_rate), (7, 0.4, 0.02));
    assert!(matches!(h.set("rf.trees", 2.5), Err(Error::Config(_))));
    assert!(matches!(h.set("rf.colour", 1.0), Err(Error::Config(_))));
}

#[test]
fn forest_is_deterministic_and_respects_depth() {
    let (_, x, y) = survey(600, 2);
    let p = ForestParams {
        trees: 20,
        mtry: Some(4),
        max_depth: 3,
        min_leaf: 5,
    };
    let a = Forest::fit(&x.x, &y, Target::Continuous, &p, 9).unwrap();
    let b = Forest::fit(&x.x, &y, Target::Continuous, &p, 9).unwrap();
    assert_eq!(a.predict(&x.x), b.predict(&x.x));
    for t in a.trees() {
        assert!(t.depth() <= 3);
        assert_eq!(t.in_bag().iter().sum::<u32>() as usize, 600);
        for node in t.nodes() {
            if let Node::Leaf { count, .. } = node {
                assert!(*count >= 5);
            }
        }
    }
}

#[test]
fn forest_learns_a_step() {
    let rows: Vec<Vec<f64>> = (0..200).map(|i| vec![i as f64 / 200.0, (i % 7) as f64]).collect();
    let x = Matrix::from_rows(&rows).unwrap();
    let y: Vec<f64> = rows.iter().map(|r| (r[0] > 0.5) as u8 as f64).collect();
    let f = Forest::fit(
        &x,
        &y,
        Target::Categorical,
        &ForestParams {
            mtry: Some(2),
            ..Default::default()
        },
        1,
    )
    .unwrap();
    let probs = f.predict(&x);
    assert!(probs.iter().all(|p| (0.0..=1.0).contains(p)));
    let hits = probs
        .iter()
        .zip(&y)
        .filter(|(p, t)| (**p > 0.5) == (**t == 1.0))
        .count();
    assert_eq!(hits, 200);
}

#[test]
fn forest_rejects_bad_parameters() {
    let (_, x, y) = survey(100, 1);
    let zero_trees = ForestParams {
        trees: 0,
        ..Default::default()
    };
    assert!(Forest::fit(&x.x, &y, Target::Continuous, &zero_trees, 0).is_err());
    let zero_leaf = ForestParams {
        min_leaf: 0,
        ..Default::default()
    };
    assert!(Forest::fit(&x.x, &y, Target::Continuous, &zero_leaf, 0).is_err());
}

#[test]
fn ridge_path_shrinks_monotonically() {
    let (_, x, y) = survey(800, 5);
    let params = ElasticNetParams {
        alpha: 0.0,
        lambda_grid_size: 25,
        cv_folds: 5,
        lambda: None,
    };
    let m = ElasticNetModel::fit(&x.x, &y, Target::Continuous, &params, 1).unwrap();
    assert!(m.converged());
    assert!(m.lambdas().windows(2).all(|w| w[0] > w[1]));
    let norms: Vec<f64> = m
        .path()
        .iter()
        .map(|b| b[1..].iter().map(|v| v * v).sum::<f64>())
        .collect();
    assert!(norms.windows(2).all(|w| w[0] <= w[1] + 1e-12), "{norms:?}");
    let sel = m.selected_index();
    assert!(m.cv_deviance().iter().all(|d| *d >= m.cv_deviance()[sel]));
}

#[test]
fn lasso_selects_sparser_models_at_larger_penalty() {
    let (_, x, y) = survey(800, 6);
    let params = ElasticNetParams {
        alpha: 1.0,
        lambda_grid_size: 30,
        cv_folds: 5,
        lambda: None,
    };
    let m = ElasticNetModel::fit(&x.x, &y, Target::Continuous, &params, 2).unwrap();
    let nonzero: Vec<usize> = m
        .path()
        .iter()
        .map(|b| b[1..].iter().filter(|v| **v != 0.0).count())
        .collect();
    assert_eq!(nonzero[0], 0);
    assert!(nonzero.last().unwrap() > &6);
}

#[test]
fn elastic_net_validates_parameters() {
    let (_, x, y) = survey(100, 1);
    let bad_alpha = ElasticNetParams {
        alpha: 1.5,
        ..Default::default()
    };
    assert!(matches!(
        ElasticNetModel::fit(&x.x, &y, Target::Continuous, &bad_alpha, 0),
        Err(Error::Domain { .. })
    ));
    let bad_folds = ElasticNetParams {
        cv_folds: 1,
        ..Default::default()
    };
    assert!(ElasticNetModel::fit(&x.x, &y, Target::Continuous, &bad_folds, 0).is_err());
}

#[test]
fn mlp_training_is_seeded() {
    let (_, x, y) = survey(400, 7);
    let params = MlpParams {
        layer1: 16,
        layer2: 8,
        learning_rate: 0.01,
        batch_size: 40,
        epochs: 5,
        ..Default::default()
    };
    let (a, ra) = train(&x.x, &y, Target::Continuous, &params, 3).unwrap();
    let (b, rb) = train(&x.x, &y, Target::Continuous, &params, 3).unwrap();
    assert_eq!(a.parameters(), b.parameters());
    assert_eq!(ra.loss, rb.loss);
    let (c, _) = train(&x.x, &y, Target::Continuous, &params, 4).unwrap();
    assert_ne!(a.parameters(), c.parameters());
}

#[test]
fn mlp_probabilities_are_probabilities() {
    let (_, x, y) = survey(400, 8);
    let yc = poor_flags(&y);
    let params = MlpParams {
        layer1: 16,
        layer2: 8,
        learning_rate: 0.1,
        batch_size: 40,
        epochs: 30,
        ..Default::default()
    };
    let (net, report) = train(&x.x, &yc, Target::Categorical, &params, 1).unwrap();
    assert!(report.loss < std::f64::consts::LN_2, "{}", report.loss);
    assert!(net.predict(&x.x).iter().all(|p| (0.0..=1.0).contains(p)));
}

#[test]
fn mlp_rejects_bad_learning_rate() {
    let (_, x, y) = survey(100, 1);
    let params = MlpParams {
        learning_rate: 0.0,
        ..Default::default()
    };
    assert!(matches!(
        train(&x.x, &y, Target::Continuous, &params, 0),
        Err(Error::Domain { .. })
    ));
}

#[test]
fn every_family_round_trips_through_json() {
    let (_, x, y) = survey(300, 9);
    let yc = poor_flags(&y);
    let dir = tempfile::tempdir().unwrap();
    for code in ModelCode::ALL {
        let mut spec = ModelSpec::new(code, &Covariate::ALL);
        spec.hyper.rf.trees = 10;
        spec.hyper.en.lambda_grid_size = 10;
        spec.hyper.en.cv_folds = 3;
        spec.hyper.mlp.epochs = 3;
        spec.hyper.mlp.layer1 = 8;
        spec.hyper.mlp.layer2 = 4;
        let target = if code.target() == Target::Continuous { &y } else { &yc };
        let m = fit(&spec, &x, target).unwrap();
        let path = dir.path().join(format!("{code}.json"));
        m.save(&path).unwrap();
        let back = FittedModel::load(&path).unwrap();
        assert_eq!(back.code(), code);
        assert_eq!(predict(&back, &x).unwrap(), predict(&m, &x).unwrap(), "{code}");
    }
}

#[test]
fn unknown_artifact_version_is_rejected() {
    let (_, x, y) = survey(100, 1);
    let m = fit(&ModelSpec::new(ModelCode::Wcn, &Covariate::ALL), &x, &y).unwrap();
    let json = m.to_json().unwrap().replacen("\"version\":1", "\"version\":99", 1);
    assert!(matches!(FittedModel::from_json(&json), Err(Error::State(_))));
}
