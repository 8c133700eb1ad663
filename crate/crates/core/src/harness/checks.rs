use num_rational::Rational64;
use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde_json::json;

use super::exponents::ThomaeExponents;
use super::report::Residual;
use super::session::{Session, Setup};
use crate::constants::DT2_SCALE;
use crate::curve::{genus_formula, FiberProductCurve, C64};
use crate::divisor::{
    divisor_degree, enumerate_admissible, gamma_exponent, is_admissible, q_exponent, r_minus_d, rational_to_f64,
    tau_profile, BetaVector,
};
use crate::elliptic::{reduce_modular, tau_from_real_roots};
use crate::error::{Error, Result};
use crate::kernels::{fay_bilinear_check, szego_c2_prediction, szego_expansion_fit, theta_side_gradcheck};
use crate::surface::jacobian::random_regular_point;
use crate::surface::variational::{normalized_branch_coefficients, relative_error, variational_prediction};

/// Names of all checks, in suite order.
pub const CHECK_NAMES: [&str; 12] = [
    "combinatorics",
    "elliptic",
    "riemann",
    "vanishing",
    "gradient",
    "variational",
    "szego",
    "fay",
    "ode",
    "ratio",
    "exponents",
    "dt2",
];

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub residuals: Vec<Residual>,
    pub notes: Vec<String>,
    pub data: serde_json::Value,
}

pub fn run_check(name: &str, s: &Session) -> Result<Outcome> {
    match name {
        "combinatorics" => combinatorics(s),
        "elliptic" => elliptic(s),
        "riemann" => riemann(s),
        "vanishing" => vanishing(s),
        "gradient" => gradient(s),
        "variational" => variational(s),
        "szego" => szego(s),
        "fay" => fay(s),
        "ode" => ode(s),
        "ratio" => ratio(s),
        "exponents" => exponents(s),
        "dt2" => dt2(s),
        other => Err(Error::Config(format!("unknown check {other:?}"))),
    }
}

fn stream_of(name: &str) -> u64 {
    CHECK_NAMES.iter().position(|&n| n == name).map_or(99, |p| p as u64 + 1)
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

/// Distinct sorted indices: all of `0..n` if `n <= k`, else `k` sampled.
fn pick<R: Rng>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    if n <= k {
        return (0..n).collect();
    }
    let mut v = sample(rng, n, k).into_vec();
    v.sort_unstable();
    v
}

fn synthetic_curve(n: usize, m: usize) -> Result<FiberProductCurve> {
    let rows = (0..n).map(|j| (0..2 * m).map(|i| C64::new((j * 2 * m + i) as f64 + 1.0, 0.3 * j as f64)).collect()).collect();
    FiberProductCurve::validate(n, m, rows)
}

fn binom(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Exhaustive integer identities for `n <= 3`, `m <= 3`, plus the basis-count
/// identity for `n <= 4`, `m <= 5`.
pub fn combinatorics(s: &Session) -> Result<Outcome> {
    let mut violations = Vec::new();
    for n in 1..=4usize {
        for m in 1..=5usize {
            let count: i64 = (1..=n).map(|k| binom(n, k) as i64 * (m as i64 * k as i64 - 1)).sum();
            if count != genus_formula(n, m) as i64 {
                violations.push(format!("basis count ({n},{m})"));
            }
        }
    }
    let mut vectors = 0usize;
    for n in 1..=3usize {
        for m in 1..=3usize {
            let curve = synthetic_curve(n, m)?;
            if curve.differential_basis().len() != curve.genus() {
                violations.push(format!("basis length ({n},{m})"));
            }
            let adm = enumerate_admissible(&curve).count();
            if adm != binom(2 * m, m).pow(n as u32) {
                violations.push(format!("admissible count ({n},{m})"));
            }
            let nb = curve.branch_count();
            let results: Vec<Vec<String>> = (0u64..1 << nb)
                .into_par_iter()
                .map(|bits| {
                    let mut v = Vec::new();
                    let beta = BetaVector::from_bits(n, m, bits);
                    let tau = tau_profile(&curve, &beta).expect("shape");
                    if tau.sum() != 0 {
                        v.push(format!("tau sum ({n},{m},{bits})"));
                    }
                    let adm = is_admissible(&curve, &beta).expect("shape");
                    let rows = beta.row_sums().iter().all(|&r| r == m);
                    let r = r_minus_d(&curve, &beta).expect("shape");
                    if adm != rows || (r == 0) != adm {
                        v.push(format!("admissibility ({n},{m},{bits})"));
                    }
                    if adm && divisor_degree(&curve, &beta) != curve.genus() as i64 - 1 {
                        v.push(format!("degree ({n},{m},{bits})"));
                    }
                    v
                })
                .collect();
            vectors += 1 << nb;
            violations.extend(results.into_iter().flatten());
        }
    }
    let curve_ok = s.curve.differential_basis().len() == s.curve.genus();
    if !curve_ok {
        violations.push("instance basis length".into());
    }
    Ok(Outcome {
        residuals: vec![Residual::new("violations", violations.len() as f64, 0.0)],
        notes: violations.iter().take(20).cloned().collect(),
        data: json!({ "beta_vectors_checked": vectors }),
    })
}

/// Genus-one period ratio against the AGM value, both reduced to the
/// fundamental domain.
pub fn elliptic(s: &Session) -> Result<Outcome> {
    let c = &s.curve;
    if c.n() != 1 || c.m() != 2 || c.lambdas().iter().any(|l| l.im != 0.0) {
        return Err(Error::Hypothesis("the elliptic oracle needs n = 1, m = 2 with real branch points".into()));
    }
    let roots: Vec<f64> = c.lambdas().iter().map(|l| l.re).collect();
    let agm = reduce_modular(tau_from_real_roots(&roots)?);
    let ours = reduce_modular(s.base.periods.tau[(0, 0)]);
    Ok(Outcome {
        residuals: vec![
            Residual::new("tau_relative_error", rel(ours, agm), s.tol(1e-8)),
            Residual::new("reduced_real_part", ours.re.abs(), s.tol(1e-8)),
        ],
        notes: vec![],
        data: json!({ "tau_reduced": [ours.re, ours.im], "tau_agm": [agm.re, agm.im] }),
    })
}

pub fn riemann(s: &Session) -> Result<Outcome> {
    let d = s.base.periods.diagnostics;
    Ok(Outcome {
        residuals: vec![
            Residual::new("symmetry", d.symmetry_residual, s.tol(1e-8)),
            Residual::new("im_tau_not_positive", if d.min_eig_im_tau > 0.0 { 0.0 } else { 1.0 }, 0.0),
        ],
        notes: vec![],
        data: json!({ "min_eig_im_tau": d.min_eig_im_tau, "condition": d.condition, "quadrature_error": d.quadrature_error }),
    })
}

/// `|theta[e_beta](0)|` over every `beta`, against the prediction that it
/// vanishes exactly when `r(-D) > 0`.
pub fn vanishing(s: &Session) -> Result<Outcome> {
    let c = &s.curve;
    let nb = c.branch_count();
    if nb > 16 {
        return Err(Error::Hypothesis(format!("{} beta vectors is too many to enumerate", 1u64 << nb)));
    }
    let rows: Vec<(u64, i64, i64, bool, f64)> = (0u64..1 << nb)
        .into_par_iter()
        .map(|bits| {
            let beta = BetaVector::from_bits(c.n(), c.m(), bits);
            let e = s.base.e_point(&beta)?;
            let modulus = s.base.ctx.invariant_modulus(&e.value)?;
            Ok((bits, r_minus_d(c, &beta)?, divisor_degree(c, &beta), is_admissible(c, &beta)?, modulus))
        })
        .collect::<Result<_>>()?;
    let scale = rows.iter().filter(|r| r.3).map(|r| r.4).fold(0.0, f64::max);
    let g1 = c.genus() as i64 - 1;
    let mut special_nonvanishing = 0usize;
    let mut special_right_degree = (0usize, 0usize);
    let mut admissible_small = 0usize;
    for r in &rows {
        let ratio = r.4 / scale;
        if r.1 > 0 {
            if ratio >= 1e-6 {
                special_nonvanishing += 1;
            }
            if r.2 == g1 {
                special_right_degree.0 += 1;
                if ratio < 1e-6 {
                    special_right_degree.1 += 1;
                }
            }
        } else if ratio <= 1e-3 {
            admissible_small += 1;
        }
    }
    let table: Vec<_> = rows
        .iter()
        .map(|r| json!({ "bits": r.0, "r_minus_d": r.1, "degree": r.2, "admissible": r.3, "relative_modulus": r.4 / scale }))
        .collect();
    Ok(Outcome {
        residuals: vec![
            Residual::new("special_not_vanishing", special_nonvanishing as f64, 0.0),
            Residual::new("admissible_not_separated", admissible_small as f64, 0.0),
        ],
        notes: vec![format!(
            "{} of {} special vectors with deg D = g - 1 vanish",
            special_right_degree.1, special_right_degree.0
        )],
        data: json!({ "scale": scale, "vectors": table }),
    })
}

fn beta_sample(s: &Session, stream: u64, k: usize) -> Vec<BetaVector> {
    if let Some(b) = &s.beta {
        return vec![b.clone()];
    }
    let all: Vec<BetaVector> = enumerate_admissible(&s.curve).collect();
    if s.curve.n() == 1 {
        return all;
    }
    let mut rng = s.rng(stream);
    pick(&mut rng, all.len(), k).into_iter().map(|i| all[i].clone()).collect()
}

fn require_admissible(s: &Session, beta: &BetaVector, setup: &Setup) -> Result<()> {
    let ch = setup.characteristic(beta)?;
    let value = setup.theta_constant(&ch)?;
    let scale = enumerate_admissible(&s.curve)
        .take(8)
        .map(|b| setup.characteristic(&b).and_then(|c| setup.theta_constant(&c)).map(|v| v.norm()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    if value.norm() < 1e-6 * scale {
        return Err(Error::NearVanishing { value: value.norm() });
    }
    if !is_admissible(&s.curve, beta)? {
        return Err(Error::Hypothesis("beta is not admissible".into()));
    }
    Ok(())
}

pub fn gradient(s: &Session) -> Result<Outcome> {
    let betas = beta_sample(s, stream_of("gradient"), 5);
    let mut worst = 0.0f64;
    let mut rows = Vec::new();
    for b in &betas {
        require_admissible(s, b, &s.base)?;
        let ch = s.base.characteristic(b)?;
        let r = theta_side_gradcheck(&s.base.ctx, &ch)?;
        worst = worst.max(r);
        rows.push(json!({ "beta": b.entries, "relative_gradient": r, "half_period": ch.is_half_period() }));
    }
    Ok(Outcome {
        residuals: vec![Residual::new("relative_gradient", worst, s.tol(1e-6))],
        notes: vec![],
        data: json!({ "betas": rows }),
    })
}

fn branch_sample(s: &Session, stream: u64, k: usize) -> Vec<usize> {
    if s.curve.n() == 1 {
        return (0..s.curve.branch_count()).collect();
    }
    let mut rng = s.rng(stream);
    pick(&mut rng, s.curve.branch_count(), k)
}

pub fn variational(s: &Session) -> Result<Outcome> {
    let ks = branch_sample(s, stream_of("variational"), 3);
    let h = s.fd_step;
    let results: Vec<(usize, f64)> = ks
        .par_iter()
        .map(|&k| {
            let (p, m) = s.perturbed_pair(k, h)?;
            let fd = (&p.periods.tau - &m.periods.tau) / C64::new(2.0 * h, 0.0);
            let pred = variational_prediction(&s.curve, &s.base.periods, k);
            Ok((k, relative_error(&fd, &pred)))
        })
        .collect::<Result<_>>()?;
    let worst = results.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(Outcome {
        residuals: vec![Residual::new("relative_error", worst, s.tol(s.config.tolerances.check))],
        notes: vec![],
        data: json!({ "fd_step": h, "branches": results.iter().map(|r| json!({"k": r.0, "relative_error": r.1})).collect::<Vec<_>>() }),
    })
}

pub fn szego(s: &Session) -> Result<Outcome> {
    let beta = s.default_beta();
    if !is_admissible(&s.curve, &beta)? {
        return Err(Error::Hypothesis("beta is not admissible".into()));
    }
    let mut rng = s.rng(stream_of("szego"));
    let (mut e0, mut e1, mut e2) = (0.0f64, 0.0f64, 0.0f64);
    let mut rows = Vec::new();
    for _ in 0..5 {
        let q = random_regular_point(&s.curve, &mut rng);
        let fit = szego_expansion_fit(&s.curve, &beta, &q)?;
        let pred = szego_c2_prediction(&s.curve, &beta, q.x);
        e0 = e0.max((fit.c0 - 1.0).norm());
        e1 = e1.max(fit.c1.norm());
        e2 = e2.max(rel(fit.c2, pred));
        rows.push(json!({
            "x": [q.x.re, q.x.im], "c0": [fit.c0.re, fit.c0.im], "c1": [fit.c1.re, fit.c1.im],
            "c2": [fit.c2.re, fit.c2.im], "predicted_c2": [pred.re, pred.im], "fit_residual": fit.residual,
        }));
    }
    Ok(Outcome {
        residuals: vec![
            Residual::new("c0_minus_one", e0, s.tol(1e-8)),
            Residual::new("c1", e1, s.tol(1e-8)),
            Residual::new("c2_relative_error", e2, s.tol(1e-6)),
        ],
        notes: vec![],
        data: json!({ "beta": beta.entries, "points": rows }),
    })
}

pub fn fay(s: &Session) -> Result<Outcome> {
    let beta = s.default_beta();
    if !is_admissible(&s.curve, &beta)? {
        return Err(Error::Hypothesis("beta is not admissible".into()));
    }
    let mut rng = s.rng(stream_of("fay"));
    let mut worst = 0.0f64;
    let mut lin = 0.0f64;
    let mut lead = 0.0f64;
    let mut rows = Vec::new();
    for _ in 0..3 {
        let q = random_regular_point(&s.curve, &mut rng);
        let r = fay_bilinear_check(&s.curve, &s.base.periods, &beta, &s.base.riemann.value, &q)?;
        worst = worst.max(r.relative_error);
        lin = lin.max(r.fit.c1.norm());
        lead = lead.max((r.fit.c0 - 1.0).norm());
        rows.push(json!({ "x": [q.x.re, q.x.im], "relative_error": r.relative_error, "reflection_residual": r.reflection_residual }));
    }
    Ok(Outcome {
        residuals: vec![
            Residual::new("leading_minus_one", lead, s.tol(1e-8)),
            Residual::new("linear", lin, s.tol(1e-8)),
            Residual::new("quadratic_relative_error", worst, s.tol(1e-6)),
        ],
        notes: vec![],
        data: json!({ "beta": beta.entries, "points": rows }),
    })
}

fn ode_combos(s: &Session) -> Vec<(BetaVector, usize)> {
    let nb = s.curve.branch_count();
    if s.curve.n() == 1 {
        let betas = beta_sample(s, stream_of("ode"), 0);
        return betas.into_iter().flat_map(|b| (0..nb).map(move |k| (b.clone(), k))).collect();
    }
    let betas: Vec<BetaVector> = match &s.beta {
        Some(b) => vec![b.clone()],
        None => enumerate_admissible(&s.curve).collect(),
    };
    let mut rng = s.rng(stream_of("ode"));
    pick(&mut rng, betas.len() * nb, 5).into_iter().map(|i| (betas[i / nb].clone(), i % nb)).collect()
}

/// `d log theta[e_beta](0) / d lambda_k` by central differences.
fn dlog_theta(plus: &Setup, minus: &Setup, base: &Setup, beta: &BetaVector, h: f64) -> Result<C64> {
    let ch = base.characteristic(beta)?;
    if plus.characteristic(beta)? != ch || minus.characteristic(beta)? != ch {
        return Err(Error::BasisJump("theta characteristic changed under perturbation".into()));
    }
    let tp = plus.theta_constant(&ch)?;
    let tm = minus.theta_constant(&ch)?;
    Ok((tp / tm).ln() / (2.0 * h))
}

fn dlog_det_c(plus: &Setup, minus: &Setup, h: f64) -> C64 {
    (plus.periods.det_c / minus.periods.det_c).ln() / (2.0 * h)
}

pub fn ode(s: &Session) -> Result<Outcome> {
    let combos = ode_combos(s);
    for (b, _) in &combos {
        require_admissible(s, b, &s.base)?;
    }
    let h = s.fd_step;
    let mut ks: Vec<usize> = combos.iter().map(|c| c.1).collect();
    ks.sort_unstable();
    ks.dedup();
    let pairs: Vec<(usize, Setup, Setup)> = ks
        .par_iter()
        .map(|&k| s.perturbed_pair(k, h).map(|(p, m)| (k, p, m)))
        .collect::<Result<_>>()?;
    let lambdas = s.curve.lambdas();
    let mut worst = 0.0f64;
    let mut worst_classical = 0.0f64;
    let mut rows = Vec::new();
    for (beta, k) in &combos {
        let (_, p, m) = pairs.iter().find(|t| t.0 == *k).expect("perturbed pair");
        let lhs = dlog_theta(p, m, &s.base, beta, h)?;
        let ddet = dlog_det_c(p, m, h);
        let ex = ThomaeExponents::from_formula(&s.curve, beta)?;
        let rhs = ddet * rational_to_f64(ex.det_c_weight) + ex.pole_sum(&lambdas, *k);
        let r = rel(rhs, lhs);
        worst = worst.max(r);
        let mut row = json!({
            "beta": beta.entries, "k": k, "lhs": [lhs.re, lhs.im], "rhs": [rhs.re, rhs.im], "relative_residual": r,
        });
        if s.curve.n() == 1 {
            let cl = ThomaeExponents::classical(&s.curve, beta)?;
            let rc = ddet * 0.5 + cl.pole_sum(&lambdas, *k);
            let rr = rel(rc, lhs);
            worst_classical = worst_classical.max(rr);
            row["classical_rhs"] = json!([rc.re, rc.im]);
            row["classical_relative_residual"] = json!(rr);
        }
        rows.push(row);
    }
    let mut notes = Vec::new();
    if s.curve.n() == 1 {
        notes.push(format!(
            "control with the classical exponents (1/4 for equal labels, 0 otherwise): worst residual {worst_classical:.3e}"
        ));
    }
    let fit = fit_exponent_classes(s, &combos, &pairs)?;
    if let Some(f) = &fit {
        notes.push(format!("least-squares exponents: {}", f.summary()));
    }
    Ok(Outcome {
        residuals: vec![Residual::new("relative_residual", worst, s.tol(s.config.tolerances.check))],
        notes,
        data: json!({ "fd_step": h, "combinations": rows, "fitted_exponents": fit.map(|f| f.to_json()) }),
    })
}

/// Continuous logarithm: the branch of `log z` nearest to `previous`.
fn unwrap_log(z: C64, previous: Option<C64>) -> C64 {
    let l = z.ln();
    match previous {
        None => l,
        Some(p) => {
            let turns = ((p.im - l.im) / std::f64::consts::TAU).round();
            C64::new(l.re, l.im + turns * std::f64::consts::TAU)
        }
    }
}

struct PathTrack {
    log_theta: Option<C64>,
    log_det: Option<C64>,
    log_pairs: Vec<Option<C64>>,
}

fn alpha_along(s: &Session, beta: &BetaVector, k: usize, path: &[C64], ex: &[ThomaeExponents]) -> Result<Vec<Vec<C64>>> {
    let ch = s.base.characteristic(beta)?;
    let sep = s.curve.min_branch_separation();
    let mut track = PathTrack { log_theta: None, log_det: None, log_pairs: vec![None; ex[0].pairs.len()] };
    let mut out = Vec::new();
    for &lam in path {
        if let Some(j) = (0..s.curve.branch_count()).find(|&j| j != k && (s.curve.lambda(j) - lam).norm() < 1e-3 * sep) {
            return Err(Error::PathCollision(j));
        }
        let curve = s.curve.with_branch_point(k, lam)?;
        let setup = s.setup_for(&curve)?;
        if setup.fingerprint() != s.base.fingerprint() {
            return Err(Error::BasisJump("homology changed along the deformation path".into()));
        }
        if setup.characteristic(beta)? != ch {
            return Err(Error::BasisJump("theta characteristic changed along the deformation path".into()));
        }
        let lt = unwrap_log(setup.theta_constant(&ch)?, track.log_theta);
        let ld = unwrap_log(setup.periods.det_c, track.log_det);
        track.log_theta = Some(lt);
        track.log_det = Some(ld);
        let lambdas = curve.lambdas();
        let logs: Vec<C64> = ex[0]
            .pairs
            .iter()
            .zip(&track.log_pairs)
            .map(|(p, prev)| unwrap_log(lambdas[p.a] - lambdas[p.b], *prev))
            .collect();
        track.log_pairs = logs.iter().map(|&l| Some(l)).collect();
        out.push(
            ex.iter()
                .map(|e| {
                    let prod: C64 = e.pairs.iter().zip(&logs).map(|(p, &l)| l * rational_to_f64(p.exponent)).sum();
                    lt - ld * rational_to_f64(e.det_c_weight) - prod
                })
                .collect(),
        );
    }
    Ok(out)
}

/// Deformation of branch point `k` along a line through five waypoints, with
/// intermediate steps for logarithm tracking.
fn deformation_path(s: &Session, k: usize, bend: f64) -> Vec<(C64, bool)> {
    let sep = s.curve.min_branch_separation();
    let delta = C64::from_polar(0.2 * sep, std::f64::consts::FRAC_PI_3);
    let normal = delta * C64::new(0.0, 1.0);
    let start = s.curve.lambda(k);
    (0..=16)
        .map(|i| {
            let t = i as f64 / 16.0;
            (start + delta * t + normal * (bend * t * (1.0 - t)), i % 4 == 0)
        })
        .collect()
}

pub fn ratio(s: &Session) -> Result<Outcome> {
    let beta = s.default_beta();
    require_admissible(s, &beta, &s.base)?;
    let k = 0;
    let mut ex = vec![ThomaeExponents::from_formula(&s.curve, &beta)?];
    if s.curve.n() == 1 {
        ex.push(ThomaeExponents::classical(&s.curve, &beta)?);
    }
    let path = deformation_path(s, k, 0.0);
    let pts: Vec<C64> = path.iter().map(|p| p.0).collect();
    let logs = alpha_along(s, &beta, k, &pts, &ex)?;
    let dev = |idx: usize| -> (f64, Vec<C64>) {
        let ratios: Vec<C64> =
            logs.iter().zip(&path).filter(|(_, p)| p.1).map(|(l, _)| (l[idx] - logs[0][idx]).exp()).collect();
        (ratios.iter().map(|r| (r - 1.0).norm()).fold(0.0, f64::max), ratios)
    };
    let (deviation, ratios) = dev(0);
    let bent = deformation_path(s, k, 1.0);
    let bent_logs = alpha_along(s, &beta, k, &bent.iter().map(|p| p.0).collect::<Vec<_>>(), &ex[..1])?;
    let end_a = logs.last().expect("path")[0] - logs[0][0];
    let end_b = bent_logs.last().expect("path")[0] - bent_logs[0][0];
    let path_dependence = ((end_a - end_b).exp() - 1.0).norm();
    let mut notes = Vec::new();
    let mut data = json!({
        "beta": beta.entries, "branch": k,
        "waypoints": path.iter().filter(|p| p.1).map(|p| [p.0.re, p.0.im]).collect::<Vec<_>>(),
        "alpha_ratio": ratios.iter().map(|r| [r.re, r.im]).collect::<Vec<_>>(),
        "alpha0_log": [logs[0][0].re, logs[0][0].im],
    });
    if ex.len() > 1 {
        let (cd, cr) = dev(1);
        notes.push(format!("control with the classical exponents: deviation {cd:.3e}"));
        data["classical_alpha_ratio"] = json!(cr.iter().map(|r| [r.re, r.im]).collect::<Vec<_>>());
    }
    Ok(Outcome {
        residuals: vec![
            Residual::new("alpha_deviation", deviation, s.tol(s.config.tolerances.check)),
            Residual::new("path_dependence", path_dependence, s.tol(s.config.tolerances.check)),
        ],
        notes,
        data,
    })
}

pub fn exponents(s: &Session) -> Result<Outcome> {
    let betas: Vec<BetaVector> = enumerate_admissible(&s.curve).collect();
    let mut asym = 0usize;
    let mut denom = 0usize;
    let mut pattern = 0usize;
    let (r3, r1) = (Rational64::new(3, 16), Rational64::new(-1, 16));
    for b in &betas {
        let ex = ThomaeExponents::from_formula(&s.curve, b)?;
        if !ex.denominators_divide(32) {
            denom += 1;
        }
        for p in &ex.pairs {
            let (pa, pb) = (s.curve.branch_id(p.a), s.curve.branch_id(p.b));
            let swapped = q_exponent(&s.curve, b, pb, pa)? + gamma_exponent(&s.curve, pb, pa)? / 2;
            if swapped != p.exponent {
                asym += 1;
            }
            if s.curve.n() == 1 {
                let same = b.get(pa) == b.get(pb);
                if p.exponent != if same { r3 } else { r1 } {
                    pattern += 1;
                }
            }
        }
    }
    let mut residuals = vec![
        Residual::new("asymmetric_pairs", asym as f64, 0.0),
        Residual::new("denominator_not_dividing_32", denom as f64, 0.0),
    ];
    if s.curve.n() == 1 {
        residuals.push(Residual::new("single_factor_pattern_mismatch", pattern as f64, 0.0));
    }
    let first = betas.first().map(|b| ThomaeExponents::from_formula(&s.curve, b)).transpose()?;
    Ok(Outcome {
        residuals,
        notes: vec![],
        data: json!({
            "admissible": betas.len(),
            "distinct_values": first.map(|e| e.distinct().iter().map(|r| r.to_string()).collect::<Vec<_>>()),
        }),
    })
}

/// The two expressions for the `dt^2` coefficient at a branch point:
/// `kappa * sum_Q sum_rs d^2 log theta v_r v_s` against
/// `sum_j (q + gamma) / (lambda_i - lambda_j) + d log det C / d lambda_i`.
pub fn dt2(s: &Session) -> Result<Outcome> {
    let beta = s.default_beta();
    require_admissible(s, &beta, &s.base)?;
    let ks = branch_sample(s, stream_of("dt2"), 3);
    let ch = s.base.characteristic(&beta)?;
    let z = vec![C64::new(0.0, 0.0); s.base.ctx.genus()];
    let hess = s.base.ctx.theta_hessian_log(&ch, &z, 1e-300)?;
    let h = s.fd_step;
    let lambdas = s.curve.lambdas();
    let rows: Vec<(usize, C64, C64, C64, f64, f64)> = ks
        .par_iter()
        .map(|&k| {
            let mut contracted = C64::new(0.0, 0.0);
            let mut asym = 0.0f64;
            for v in normalized_branch_coefficients(&s.curve, &s.base.periods, k) {
                let g = v.len();
                for r in 0..g {
                    for c in 0..g {
                        contracted += hess[(r, c)] * v[r] * v[c];
                        asym = asym.max((hess[(r, c)] * v[r] * v[c] - hess[(c, r)] * v[c] * v[r]).norm());
                    }
                }
            }
            let lhs = contracted * DT2_SCALE;
            let (p, m) = s.perturbed_pair(k, h)?;
            let ddet = dlog_det_c(&p, &m, h);
            let mut poles = C64::new(0.0, 0.0);
            for j in 0..s.curve.branch_count() {
                if j != k {
                    let (pa, pb) = (s.curve.branch_id(k), s.curve.branch_id(j));
                    let e = q_exponent(&s.curve, &beta, pa, pb)? + gamma_exponent(&s.curve, pa, pb)?;
                    poles += rational_to_f64(e) / (lambdas[k] - lambdas[j]);
                }
            }
            let rhs = poles + ddet;
            let route = rel(contracted * DT2_SCALE, dlog_theta(&p, &m, &s.base, &beta, h)? * 2.0);
            Ok((k, lhs, rhs, contracted, route, asym))
        })
        .collect::<Result<_>>()?;
    let worst = rows.iter().map(|r| rel(r.1, r.2)).fold(0.0, f64::max);
    let route = rows.iter().map(|r| r.4).fold(0.0, f64::max);
    Ok(Outcome {
        residuals: vec![Residual::new("relative_residual", worst, s.tol(s.config.tolerances.check))],
        notes: vec![
            "the det C term is read as d log det C / d lambda".into(),
            format!("heat-equation route: kappa S against 2 d log theta / d lambda, worst relative gap {route:.3e}"),
        ],
        data: json!({
            "beta": beta.entries, "kappa": DT2_SCALE,
            "branches": rows.iter().map(|r| json!({
                "k": r.0, "lhs": [r.1.re, r.1.im], "rhs": [r.2.re, r.2.im], "contracted_hessian": [r.3.re, r.3.im],
                "route_gap": r.4, "hessian_asymmetry": r.5,
            })).collect::<Vec<_>>(),
        }),
    })
}

/// Pair classes for exponent fitting.
const CLASS_NAMES: [&str; 3] = ["same factor, equal labels", "same factor, unequal labels", "different factors"];

struct ExponentFit {
    det_weight: f64,
    classes: Vec<(usize, f64)>,
    residual: f64,
}

impl ExponentFit {
    fn summary(&self) -> String {
        let mut parts = vec![format!("log det C weight {:.6}", self.det_weight)];
        parts.extend(self.classes.iter().map(|(c, v)| format!("{} {:.6}", CLASS_NAMES[*c], v)));
        parts.push(format!("fit residual {:.2e}", self.residual));
        parts.join("; ")
    }

    fn to_json(&self) -> serde_json::Value {
        json!({
            "det_c_weight": self.det_weight,
            "classes": self.classes.iter().map(|(c, v)| json!({"class": CLASS_NAMES[*c], "exponent": v})).collect::<Vec<_>>(),
            "residual": self.residual,
        })
    }
}

/// Fits `d log theta / d lambda_k = w d log det C / d lambda_k + sum_j e_c(k,j) / (lambda_k - lambda_j)`
/// with one exponent per pair class, over all sampled combinations.
fn fit_exponent_classes(s: &Session, combos: &[(BetaVector, usize)], pairs: &[(usize, Setup, Setup)]) -> Result<Option<ExponentFit>> {
    let lambdas = s.curve.lambdas();
    let h = s.fd_step;
    let class_of = |beta: &BetaVector, a: usize, b: usize| {
        let (pa, pb) = (s.curve.branch_id(a), s.curve.branch_id(b));
        if pa.factor != pb.factor {
            2
        } else if beta.get(pa) == beta.get(pb) {
            0
        } else {
            1
        }
    };
    let used: Vec<usize> = if s.curve.n() == 1 { vec![0, 1] } else { vec![0, 1, 2] };
    let unknowns = 1 + used.len();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    for (beta, k) in combos {
        let (_, p, m) = pairs.iter().find(|t| t.0 == *k).expect("perturbed pair");
        let lhs = dlog_theta(p, m, &s.base, beta, h)?;
        let ddet = dlog_det_c(p, m, h);
        let mut coeff = vec![C64::new(0.0, 0.0); unknowns];
        coeff[0] = ddet;
        for j in 0..s.curve.branch_count() {
            if j != *k {
                let c = class_of(beta, *k, j);
                if let Some(pos) = used.iter().position(|&u| u == c) {
                    coeff[1 + pos] += (lambdas[*k] - lambdas[j]).inv();
                }
            }
        }
        rows.push(coeff.iter().map(|c| c.re).collect());
        rhs.push(lhs.re);
        rows.push(coeff.iter().map(|c| c.im).collect());
        rhs.push(lhs.im);
    }
    if rows.len() < unknowns {
        return Ok(None);
    }
    let a = nalgebra::DMatrix::from_fn(rows.len(), unknowns, |r, c| rows[r][c]);
    let b = nalgebra::DVector::from_vec(rhs);
    let svd = a.clone().svd(true, true);
    let Ok(x) = svd.solve(&b, 1e-12) else { return Ok(None) };
    let residual = (&a * &x - &b).norm() / b.norm().max(1e-300);
    Ok(Some(ExponentFit {
        det_weight: x[0],
        classes: used.iter().enumerate().map(|(i, &c)| (c, x[1 + i])).collect(),
        residual,
    }))
}
