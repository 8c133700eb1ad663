use thomae_core::divisor::{enumerate_admissible, is_admissible};
use thomae_core::harness::{exit_code, run_suite, Session};
use thomae_core::{BetaVector, Config, Error, RunOptions, Status};

fn session(config: Config) -> Session {
    Session::new(config, RunOptions::default()).unwrap()
}

/// Modulus of `theta[e_beta](0)` divided by that of a reference admissible
/// vector. Both carry the same modular factor, so the ratio does not depend
/// on the homology basis.
fn modulus_ratio(s: &Session, beta: &BetaVector, reference: &BetaVector) -> f64 {
    let m = |b: &BetaVector| {
        let e = s.base.e_point(b).unwrap();
        s.base.ctx.invariant_modulus(&e.value).unwrap()
    };
    m(beta) / m(reference)
}

#[test]
fn inadmissible_vectors_of_full_weight_vanish_on_two_factors() {
    let s = session(Config::preset("2x2").unwrap());
    let c = &s.curve;
    let reference = enumerate_admissible(c).next().unwrap();
    let mut count = 0;
    for bits in 0u64..1 << c.branch_count() {
        let beta = BetaVector::from_bits(c.n(), c.m(), bits);
        if beta.total() != c.n() * c.m() || is_admissible(c, &beta).unwrap() {
            continue;
        }
        count += 1;
        let r = modulus_ratio(&s, &beta, &reference);
        assert!(r < 1e-6, "beta {:?}: ratio {r:e}", beta.flat());
    }
    assert_eq!(count, 34);
}

#[test]
fn modulus_ratios_survive_base_point_and_relabeling() {
    let config = Config::preset("1x3").unwrap();
    let a = session(config.clone());
    let mut moved = config.clone();
    moved.base_point = Some([0.3, -1.7]);
    let b = session(moved);
    let mut reversed = config.clone();
    reversed.factors[0].lambda.reverse();
    let c = session(reversed);
    assert_ne!(a.base.fingerprint(), b.base.fingerprint());

    let all: Vec<BetaVector> = enumerate_admissible(&a.curve).collect();
    let reference = &all[0];
    let flip = |beta: &BetaVector| {
        let mut row = beta.flat();
        row.reverse();
        BetaVector::new(vec![row])
    };
    for beta in &all[1..] {
        let ra = modulus_ratio(&a, beta, reference);
        let rb = modulus_ratio(&b, beta, reference);
        let rc = modulus_ratio(&c, &flip(beta), &flip(reference));
        assert!((ra - rb).abs() < 1e-9 * ra, "base point: {ra} vs {rb}");
        assert!((ra - rc).abs() < 1e-9 * ra, "relabeling: {ra} vs {rc}");
    }
}

#[test]
fn inadmissible_beta_is_skipped_with_reason() {
    let mut config = Config::preset("1x3").unwrap();
    config.beta = Some(vec![vec![1, 1, 1, 1, 0, 0]]);
    let reports = run_suite(&config, "ode", RunOptions::default()).unwrap();
    assert_eq!(reports.len(), 1);
    assert_eq!(reports[0].status, Status::Skipped);
    assert!(reports[0].reason.as_deref().unwrap().starts_with("skipped"));
    assert_eq!(exit_code(&reports), 0);
}

#[test]
fn unknown_check_and_bad_beta_are_input_errors() {
    let config = Config::preset("1x2").unwrap();
    let err = run_suite(&config, "nonsense", RunOptions::default()).unwrap_err();
    assert!(err.is_input_error());

    let mut bad = config.clone();
    bad.beta = Some(vec![vec![1, 2, 0, 0]]);
    assert!(matches!(Session::new(bad, RunOptions::default()), Err(e) if e.is_input_error()));

    let mut wrong_shape = config;
    wrong_shape.beta = Some(vec![vec![1, 0]]);
    assert!(matches!(Session::new(wrong_shape, RunOptions::default()), Err(e) if e.is_input_error()));
}

#[test]
fn config_rejects_unknown_fields_and_coincident_points() {
    let text = r#"{"n": 1, "m": 2, "factors": [{"lambda": [[0,0],[1,0],[2,0],[3,0]]}], "colour": 1}"#;
    assert!(matches!(Config::from_json_str(text), Err(Error::Config(_))));
    let text = r#"{"n": 1, "m": 2, "factors": [{"lambda": [[0,0],[1,0],[1,0],[3,0]]}]}"#;
    let config = Config::from_json_str(text).unwrap();
    assert!(config.curve().unwrap_err().is_input_error());
}

#[test]
fn reports_carry_provenance() {
    let config = Config::preset("1x2").unwrap();
    let reports = run_suite(&config, "riemann", RunOptions::default()).unwrap();
    let p = &reports[0].provenance;
    assert_eq!(p.config_hash, config.hash());
    assert!(p.homology_fingerprint.as_deref().is_some_and(|f| f.len() == 64));
    assert_eq!(p.calibration_version, thomae_core::constants::CALIBRATION_VERSION);
}

#[test]
fn tolerance_scale_loosens_every_check() {
    let config = Config::preset("1x3").unwrap();
    let run = RunOptions { tol_scale: 1e3, ..RunOptions::default() };
    let reports = run_suite(&config, "gradient", run).unwrap();
    let tol = reports[0].residuals[0].tolerance;
    assert!((tol - 1e-3).abs() < 1e-15, "{tol}");
}
