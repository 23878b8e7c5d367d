mod common;

use molscale_core::codecs::Representation;
use molscale_core::scaling::*;
use proptest::prelude::*;
use serde_json::Value;

const SIZES: [f64; 8] = [1e6, 4e6, 16e6, 43e6, 85e6, 152e6, 278e6, 650e6];
const BUDGETS: [f64; 4] = [1e8, 3e8, 1e9, 3e9];

fn params_of(v: &Value) -> FitParams<f64> {
    serde_json::from_value(v.clone()).unwrap()
}

fn observations(grid: &Value, losses: &Value) -> Vec<RunObservation> {
    let grid: Vec<(f64, f64)> = serde_json::from_value(grid.clone()).unwrap();
    let losses: Vec<f64> = serde_json::from_value(losses.clone()).unwrap();
    grid.iter()
        .zip(losses)
        .enumerate()
        .map(|(i, (&(p, d), loss))| RunObservation {
            representation: Representation::Smiles,
            p,
            d,
            budget: d,
            epoch: 1,
            loss,
            source_run_id: format!("run-{i}"),
        })
        .collect()
}

fn synthetic(p: &FitParams<f64>) -> Vec<RunObservation> {
    let mut out = Vec::new();
    for &s in &SIZES {
        for &b in &BUDGETS {
            out.push(RunObservation {
                representation: Representation::Smiles,
                p: s,
                d: b,
                budget: b,
                epoch: 1,
                loss: p.predict(s, b).unwrap(),
                source_run_id: String::new(),
            });
        }
    }
    out
}

fn max_rel(a: &FitParams<f64>, b: &FitParams<f64>) -> f64 {
    [
        (a.l_inf, b.l_inf),
        (a.k_p, b.k_p),
        (a.k_d, b.k_d),
        (a.alpha, b.alpha),
        (a.beta, b.beta),
    ]
    .iter()
    .map(|&(x, y)| ((x - y) / y).abs())
    .fold(0.0, f64::max)
}

#[test]
fn prediction_matches_high_precision_evaluation() {
    let b = common::bundle("surface.json");
    let e = b
        .entries
        .iter()
        .find(|e| e.kind == "surface" && e.input["grid"].as_array().unwrap().len() == 1)
        .unwrap();
    let p = params_of(&e.input["params"]);
    let want = e.expected[0].as_f64().unwrap();
    assert!(((predict_loss(&p, 1e6, 1e8).unwrap() - want) / want).abs() < 1e-14);
}

#[test]
fn noiseless_fixture_surface_is_recovered() {
    let b = common::bundle("surface.json");
    let e = b
        .entries
        .iter()
        .find(|e| {
            e.kind == "surface"
                && e.input["sigma"].as_f64() == Some(0.0)
                && e.input["grid"].as_array().unwrap().len() == 32
        })
        .unwrap();
    let truth = params_of(&e.input["params"]);
    let obs = observations(&e.input["grid"], &e.expected);
    let (fit, diag) = fit_bivariate::<f64>(&obs, &FitConfig::default()).unwrap();
    assert!(max_rel(&fit, &truth) < 1e-3, "{fit:?}");
    assert_eq!(diag.n, 32);
    assert!(diag.converged);
    assert!(diag.mae <= diag.rmse && diag.rmse < 1e-9);
}

#[test]
fn noisy_fixture_alpha_within_tolerance() {
    let b = common::bundle("surface.json");
    let mut errs = Vec::new();
    for e in b
        .entries
        .iter()
        .filter(|e| e.kind == "surface" && e.input["sigma"].as_f64() == Some(0.005))
    {
        let truth = params_of(&e.input["params"]);
        let obs = observations(&e.input["grid"], &e.expected);
        let (fit, diag) = fit_bivariate::<f64>(&obs, &FitConfig::default()).unwrap();
        assert!(diag.mae <= diag.rmse);
        errs.push(((fit.alpha - truth.alpha) / truth.alpha).abs());
    }
    assert_eq!(errs.len(), 50);
    errs.sort_by(f64::total_cmp);
    let median = (errs[24] + errs[25]) / 2.0;
    assert!(median <= 0.15, "median alpha error {median}");
}

#[test]
fn fit_is_seed_deterministic_and_thread_independent() {
    let truth = FitParams::new(0.5, 2.0, 30.0, 0.08, 0.3);
    let mut obs = synthetic(&truth);
    for (i, o) in obs.iter_mut().enumerate() {
        o.loss += 0.004 * ((i * 7919 % 13) as f64 / 6.0 - 1.0);
    }
    let cfg = FitConfig {
        seed: 42,
        ..FitConfig::default()
    };
    let a = fit_bivariate::<f64>(&obs, &cfg).unwrap();
    let b = fit_bivariate::<f64>(&obs, &cfg).unwrap();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let c = one.install(|| fit_bivariate::<f64>(&obs, &cfg).unwrap());
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn fit_report_round_trips_through_json() {
    let truth = FitParams::new(0.45, 3.2, 14.0, 0.06, 0.35);
    let (p, d) = fit_bivariate::<f64>(&synthetic(&truth), &FitConfig::default()).unwrap();
    let report = FitReport::new(Representation::DeepSmiles, &p, &d);
    let json = serde_json::to_value(&report).unwrap();
    for key in [
        "representation",
        "alpha",
        "beta",
        "mae",
        "rmse",
        "n",
        "L_inf",
        "k_P",
        "k_D",
    ] {
        assert!(json.get(key).is_some(), "{key}");
    }
    assert_eq!(json["representation"], "DeepSMILES");
    let back: FitReport<f64> = serde_json::from_value(json).unwrap();
    assert_eq!(back.params(), p);
}

#[test]
fn hand_residuals_are_bit_stable() {
    assert_eq!(error_stats(&[0.01, -0.01]).unwrap(), (0.01, 0.01));
    let (mae, rmse) = error_stats(&[0.0f64, 0.02]).unwrap();
    assert_eq!(mae.to_bits(), 0.01f64.to_bits());
    assert_eq!(rmse.to_bits(), 0.0002f64.sqrt().to_bits());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn recovers_parameters_in_realistic_box(
        l_inf in 0.2f64..1.0,
        k_p in 0.5f64..100.0,
        k_d in 0.5f64..100.0,
        alpha in 0.01f64..0.8,
        beta in 0.01f64..0.8,
    ) {
        let truth = FitParams::new(l_inf, k_p, k_d, alpha, beta);
        let (fit, _) = fit_bivariate::<f64>(&synthetic(&truth), &FitConfig::default()).unwrap();
        prop_assert!(max_rel(&fit, &truth) < 1e-3, "{:?} vs {:?}", fit, truth);
    }
}

proptest! {
    #[test]
    fn mae_never_exceeds_rmse(r in prop::collection::vec(-1.0f64..1.0, 1..200)) {
        let (mae, rmse) = error_stats(&r).unwrap();
        prop_assert!(mae <= rmse);
    }

    #[test]
    fn prediction_decreases_in_both_inputs(
        l_inf in 0.0f64..1.0, k_p in 0.01f64..100.0, k_d in 0.01f64..100.0,
        alpha in 0.01f64..0.8, beta in 0.01f64..0.8, p in 1e3f64..1e10, d in 1e3f64..1e12,
    ) {
        let f = FitParams::new(l_inf, k_p, k_d, alpha, beta);
        prop_assert!(f.predict(p, d).unwrap() > f.predict(2.0 * p, d).unwrap());
        prop_assert!(f.predict(p, d).unwrap() > f.predict(p, 2.0 * d).unwrap());
    }
}
