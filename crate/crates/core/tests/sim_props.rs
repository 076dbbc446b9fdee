mod common;

use std::sync::Mutex;

use nolhd::construct::{random_centered_lh, random_latin_hypercube};
use nolhd::lasso::LassoFit;
use nolhd::seed::rng_from_seed;
use nolhd::sim::{
    builtin_scenario, correlation_profile, quartiles, run_experiment, run_experiment_with, run_replication,
    DesignMethodSpec, FitStrategy, MethodTag, Refresh, SimScenario,
};
use nolhd::{DesignMatrix, Error, Result};
use statrs::distribution::{ContinuousCDF, Normal};

/// Records what each method's fit sees and returns the zero fit.
#[derive(Default)]
struct Recorder {
    seen: Mutex<Vec<(Vec<f64>, Vec<f64>, Vec<usize>)>>,
    beta: Vec<f64>,
}

impl FitStrategy for Recorder {
    fn fit(&self, x: &DesignMatrix, y: &[f64], folds: &[usize]) -> Result<LassoFit> {
        let signal = x.mul_vec(&self.beta)?;
        let eps = y.iter().zip(&signal).map(|(a, b)| a - b).collect();
        self.seen.lock().unwrap().push((eps, y.to_vec(), folds.to_vec()));
        let p = x.cols();
        Ok(LassoFit {
            beta: vec![0.0; p],
            active_set: vec![],
            lambda: 0.0,
            iterations: 0,
            max_kkt_violation: 0.0,
            converged: true,
        })
    }
}

fn small_scenario(methods: Vec<DesignMethodSpec>) -> SimScenario {
    let mut scn = builtin_scenario("ex4").unwrap();
    scn.name = "small".into();
    scn.n = 20;
    scn.p = 10;
    scn.beta = vec![3.0, 2.0, 1.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    scn.sigma = 1.0;
    scn.reps = 6;
    scn.methods = methods;
    scn.fit.grid_len = 30;
    scn
}

fn designs(n: usize, p: usize, seed: u64) -> Vec<(String, DesignMatrix)> {
    let mut rng = rng_from_seed(seed);
    vec![
        ("a".into(), random_centered_lh(n, p, &mut rng).unwrap()),
        ("b".into(), random_latin_hypercube(n, p, (-1.0, 1.0), &mut rng).unwrap()),
        ("c".into(), random_centered_lh(n, p, &mut rng).unwrap()),
    ]
}

#[test]
fn noise_and_folds_are_shared_across_methods() {
    let scn = small_scenario(vec![]);
    let rec = Recorder { beta: scn.beta.clone(), ..Default::default() };
    let out = run_replication(&scn, &designs(20, 10, 1), 99, &rec).unwrap();
    assert_eq!(out.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>(), ["a", "b", "c"]);
    assert!(out.iter().all(|(_, g)| *g == 3));
    let seen = rec.seen.into_inner().unwrap();
    assert_eq!(seen.len(), 3);
    for (eps, _, folds) in &seen[1..] {
        for (e, e0) in eps.iter().zip(&seen[0].0) {
            assert!((e - e0).abs() < 1e-12);
        }
        assert_eq!(folds, &seen[0].2);
    }
    // responses differ because the designs differ
    assert_ne!(seen[0].1, seen[1].1);
}

#[test]
fn dimension_mismatch_names_the_method() {
    let scn = small_scenario(vec![]);
    let mut d = designs(20, 10, 1);
    d[1].1 = random_centered_lh(20, 9, &mut rng_from_seed(0)).unwrap();
    match run_replication(&scn, &d, 1, &Recorder { beta: scn.beta.clone(), ..Default::default() }) {
        Err(Error::Dimension(msg)) => assert!(msg.contains("method b"), "{msg}"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn identical_designs_give_identical_gamma() {
    let scn = small_scenario(vec![]);
    let x = random_centered_lh(20, 10, &mut rng_from_seed(4)).unwrap();
    let strategy = nolhd::sim::CvLasso { settings: scn.fit.clone() };
    for rep in 0..5 {
        let out = run_replication(&scn, &[("x".into(), x.clone()), ("y".into(), x.clone())], rep, &strategy)
            .unwrap();
        assert_eq!(out[0].1, out[1].1);
        assert_eq!(out, run_replication(&scn, &[("x".into(), x.clone()), ("y".into(), x.clone())], rep, &strategy).unwrap());
    }
}

fn random_methods() -> Vec<DesignMethodSpec> {
    vec![
        DesignMethodSpec::new("RLHD", MethodTag::Rlhd),
        DesignMethodSpec::new("IID", MethodTag::Iid),
        DesignMethodSpec { refresh: Some(Refresh::Fixed), ..DesignMethodSpec::new("RLHD-fixed", MethodTag::Rlhd) },
    ]
}

#[test]
fn reports_are_deterministic_and_consistent() {
    let scn = small_scenario(random_methods());
    let a = run_experiment(&scn).unwrap();
    let b = run_experiment(&scn).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(a.methods.len(), 3);
    assert_eq!(a.p0, 3);
    for m in &a.methods {
        assert_eq!(m.gamma.len(), scn.reps);
        assert!(m.gamma.iter().all(|&g| g <= scn.p));
        assert_eq!(m.quartiles, quartiles(&m.gamma));
        assert!(m.quartiles.q1 <= m.quartiles.median && m.quartiles.median <= m.quartiles.q3);
    }
    assert!(a.method("RLHD-fixed").unwrap().construction_seed.is_some());
    assert!(a.method("RLHD").unwrap().construction_seed.is_none());
}

#[test]
fn single_replication_quartiles_collapse() {
    let mut scn = small_scenario(random_methods());
    scn.reps = 1;
    let report = run_experiment(&scn).unwrap();
    for m in &report.methods {
        let g = m.gamma[0] as f64;
        assert_eq!((m.quartiles.q1, m.quartiles.median, m.quartiles.q3), (g, g, g));
    }
}

#[test]
fn quartile_rule() {
    let q = quartiles(&[1, 2, 3, 4]);
    assert_eq!((q.q1, q.median, q.q3), (1.75, 2.5, 3.25));
    let q = quartiles(&[7]);
    assert_eq!((q.q1, q.median, q.q3), (7.0, 7.0, 7.0));
}

#[test]
fn builtin_scenarios() {
    let ex4 = builtin_scenario("ex4").unwrap();
    assert_eq!((ex4.n, ex4.p, ex4.truth().unwrap().p0, ex4.methods.len(), ex4.reps), (50, 48, 12, 4, 50));
    let ex5 = builtin_scenario("ex5").unwrap();
    assert_eq!(ex5.truth().unwrap().p0, 15);
    assert!((ex5.beta.iter().cloned().fold(0.0, f64::max) - 3.0).abs() < 1e-12);
    let ex6 = builtin_scenario("ex6").unwrap();
    assert_eq!((ex6.p, ex6.truth().unwrap().p0), (192, 20));
    assert!((ex6.beta[19] - 3.0).abs() < 1e-12 && ex6.beta[0] == 0.05);
    assert!(matches!(builtin_scenario("ex7"), Err(Error::Domain(_))));
}

#[test]
fn near_noiseless_recovery() {
    let mut scn = builtin_scenario("ex4").unwrap();
    scn.sigma = 1e-9;
    scn.methods.retain(|m| m.name == "NOLHD");
    let report = run_experiment(&scn).unwrap();
    let exact = report.methods[0].gamma.iter().filter(|&&g| g == 0).count();
    assert!(exact >= 45, "{exact}/50");
}

/// `P(|Z| > t sqrt(n - 1))` and `P(Z > t sqrt(n - 1))` for standard normal `Z`,
/// the large-sample law of a null sample correlation.
fn null_shares(n: usize, t: f64) -> (f64, f64) {
    let upper = Normal::standard().sf(t * ((n - 1) as f64).sqrt());
    (2.0 * upper, upper)
}

#[test]
fn correlation_profiles() {
    let prof = correlation_profile(&common::orthogonal_lh(5, 3)).unwrap();
    assert_eq!((prof.share_abs_above, prof.share_signed_above), (0.0, 0.0));
    let (mut abs, mut signed) = (0.0, 0.0);
    for seed in 0..100 {
        let x = random_latin_hypercube(64, 192, (-31.5, 31.5), &mut rng_from_seed(seed)).unwrap();
        let prof = correlation_profile(&x).unwrap();
        abs += prof.share_abs_above / 100.0;
        signed += prof.share_signed_above / 100.0;
    }
    let (abs_oracle, signed_oracle) = null_shares(64, 0.1);
    assert!((abs - abs_oracle).abs() < 0.02, "{abs} vs {abs_oracle}");
    assert!((signed - signed_oracle).abs() < 0.02, "{signed} vs {signed_oracle}");
    assert!((0.15..=0.27).contains(&signed), "{signed}");
}

#[test]
fn experiment_is_independent_of_thread_count() {
    let scn = small_scenario(random_methods());
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let threaded = pool.install(|| run_experiment(&scn).unwrap());
    let rec = Recorder { beta: scn.beta.clone(), ..Default::default() };
    let base = run_experiment(&scn).unwrap();
    assert_eq!(serde_json::to_string(&threaded).unwrap(), serde_json::to_string(&base).unwrap());
    let zero = run_experiment_with(&scn, &rec).unwrap();
    assert!(zero.methods.iter().all(|m| m.gamma.iter().all(|&g| g == 3)));
}
