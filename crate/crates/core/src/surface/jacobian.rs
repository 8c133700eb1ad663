//! Abel map, Riemann constant and the theta points `e_beta`.
//!
//! All integrals start at `(x0, sheet 0)`. A sheet `s` at `x0` is reached by
//! small loops around the first branch point of every flipped factor; the
//! loop around `lambda_k` starting on sheet `s` integrates to
//! `chi_v(s) (1 - (-1)^{v_j}) H_k`, twice the spoke integral or zero.

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::continuation::{continue_on_polyline, continue_on_segment, segment_distance};
use super::periods::PeriodData;
use crate::curve::{character, FiberProductCurve, Sheet, SurfacePoint, C64, MEMBERSHIP_TOL};
use crate::divisor::BetaVector;
use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadratureOptions};
use crate::theta::{Characteristic, ThetaContext};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobianPoint {
    pub value: Vec<C64>,
    pub reduced: bool,
}

impl JacobianPoint {
    pub fn zero(g: usize) -> Self {
        JacobianPoint { value: vec![C64::new(0.0, 0.0); g], reduced: true }
    }

    pub fn add(&self, other: &JacobianPoint) -> JacobianPoint {
        JacobianPoint { value: self.value.iter().zip(&other.value).map(|(a, b)| a + b).collect(), reduced: false }
    }

    pub fn scale(&self, s: f64) -> JacobianPoint {
        JacobianPoint { value: self.value.iter().map(|a| a * s).collect(), reduced: false }
    }
}

/// Lattice coordinates `(p, q)` with `w = p + tau q`.
pub fn lattice_coordinates(periods: &PeriodData, w: &[C64]) -> (Vec<f64>, Vec<f64>) {
    let g = periods.genus();
    let y = periods.im_tau();
    let im = DVector::from_iterator(g, w.iter().map(|v| v.im));
    let q = y.clone().lu().solve(&im).unwrap_or_else(|| DVector::zeros(g));
    let x = periods.tau.map(|z| z.re);
    let re = DVector::from_iterator(g, w.iter().map(|v| v.re));
    let p = re - x * &q;
    (p.iter().copied().collect(), q.iter().copied().collect())
}

pub fn reduce(periods: &PeriodData, w: &[C64]) -> JacobianPoint {
    let (p, q) = lattice_coordinates(periods, w);
    let frac = |v: f64| {
        let f = v - v.floor();
        if f > 1.0 - 1e-11 {
            0.0
        } else {
            f
        }
    };
    let p: Vec<f64> = p.into_iter().map(frac).collect();
    let q: Vec<f64> = q.into_iter().map(frac).collect();
    let g = periods.genus();
    let value = (0..g)
        .map(|r| C64::new(p[r], 0.0) + (0..g).map(|c| periods.tau[(r, c)] * q[c]).sum::<C64>())
        .collect();
    JacobianPoint { value, reduced: true }
}

/// Distance of `w` from the lattice, measured in lattice coordinates.
pub fn lattice_distance(periods: &PeriodData, w: &[C64]) -> f64 {
    let (p, q) = lattice_coordinates(periods, w);
    p.iter().chain(&q).map(|v| (v - v.round()).abs()).fold(0.0, f64::max)
}

fn zero_vec(g: usize) -> Vec<C64> {
    vec![C64::new(0.0, 0.0); g]
}

/// Non-normalized integral from `(x0, 0)` to `(x0, s)`.
pub fn sheet_transfer(curve: &FiberProductCurve, periods: &PeriodData, s: Sheet) -> Vec<C64> {
    let mut out = zero_vec(periods.genus());
    let mut cur = Sheet(0);
    for j in 0..curve.n() {
        if !s.has(j) {
            continue;
        }
        let k = curve.branch_index(crate::curve::BranchId { factor: j, index: 0 });
        for (i, d) in periods.basis.iter().enumerate() {
            if d.uses_factor(j) {
                out[i] += periods.spokes[k][i] * (2.0 * character(d.v, cur));
            }
        }
        cur = cur.flip(j);
    }
    out
}

/// Non-normalized integral from `(x0, 0)` to the ramification point over
/// `lambda_k` reached along the spoke on sheet `s`.
pub fn integral_to_branch(curve: &FiberProductCurve, periods: &PeriodData, k: usize, s: Sheet) -> Vec<C64> {
    let mut out = sheet_transfer(curve, periods, s);
    for (i, v) in periods.edge_integral(k, s).into_iter().enumerate() {
        out[i] += v;
    }
    out
}

fn segment_integral(curve: &FiberProductCurve, periods: &PeriodData, xa: C64, ya: &[C64], xb: C64) -> Result<Vec<C64>> {
    let basis = &periods.basis;
    let q = QuadratureOptions { rel_tol: 1e-12, abs_tol: 1e-15, ..Default::default() };
    let r = integrate(
        |t| {
            let x = xa + (xb - xa) * t;
            let y = continue_on_segment(curve, xa, ya, xb, t);
            basis
                .iter()
                .map(|d| {
                    let mut den = C64::new(1.0, 0.0);
                    for (j, &yj) in y.iter().enumerate() {
                        if d.uses_factor(j) {
                            den *= yj;
                        }
                    }
                    (xb - xa) * x.powu(d.l as u32) / den
                })
                .collect()
        },
        0.0,
        1.0,
        basis.len(),
        &q,
    )?;
    Ok(r.value)
}

/// Polyline from `x0` to `x` keeping `clearance` from all branch points.
pub fn route(curve: &FiberProductCurve, x0: C64, x: C64, clearance: f64) -> Result<Vec<C64>> {
    let lambdas = curve.lambdas();
    let ok = |path: &[C64]| {
        path.windows(2).all(|w| lambdas.iter().all(|&l| segment_distance(w[0], w[1], l) >= clearance))
    };
    let direct = vec![x0, x];
    if ok(&direct) {
        return Ok(direct);
    }
    let mid = (x0 + x) * 0.5;
    let len = (x - x0).norm().max(1e-3);
    let normal = (x - x0) * C64::new(0.0, 1.0) / len;
    for c in [0.15, -0.15, 0.3, -0.3, 0.6, -0.6, 1.0, -1.0, 2.0, -2.0] {
        let path = vec![x0, mid + normal * (c * len), x];
        if ok(&path) {
            return Ok(path);
        }
    }
    Err(Error::PathClearance(
        lambdas.iter().enumerate().min_by(|a, b| segment_distance(x0, x, *a.1).total_cmp(&segment_distance(x0, x, *b.1))).map_or(0, |p| p.0),
    ))
}

fn sheet_of(curve: &FiberProductCurve, continued: &[C64], p: &SurfacePoint) -> Result<Sheet> {
    let mut s = 0u32;
    for (j, (&c, &y)) in continued.iter().zip(&p.y).enumerate() {
        let fx = curve.factors()[j].eval(p.x);
        let tol = 1e3 * MEMBERSHIP_TOL * (1.0 + fx.norm()).sqrt();
        if (y - c).norm() <= tol.max(1e-8 * c.norm()) {
        } else if (y + c).norm() <= tol.max(1e-8 * c.norm()) {
            s |= 1 << j;
        } else {
            return Err(Error::Config(format!("point at x = {} is not on the curve", p.x)));
        }
    }
    Ok(Sheet(s))
}

/// Non-normalized integral from `(x0, 0)` to a regular point along `path`
/// (which starts at `x0` and ends at `p.x`).
pub fn integral_along(curve: &FiberProductCurve, periods: &PeriodData, p: &SurfacePoint, path: &[C64]) -> Result<Vec<C64>> {
    let x0 = periods.x0();
    let y0 = curve.principal_point(x0).y;
    let mut total = zero_vec(periods.genus());
    let mut y = y0.clone();
    for w in path.windows(2) {
        let part = segment_integral(curve, periods, w[0], &y, w[1])?;
        for (t, v) in total.iter_mut().zip(part) {
            *t += v;
        }
        y = continue_on_segment(curve, w[0], &y, w[1], 1.0);
    }
    let s = sheet_of(curve, &y, p)?;
    let mut out = sheet_transfer(curve, periods, s);
    for (i, d) in periods.basis.iter().enumerate() {
        out[i] += total[i] * character(d.v, s);
    }
    Ok(out)
}

pub fn integral_to_point(curve: &FiberProductCurve, periods: &PeriodData, p: &SurfacePoint) -> Result<Vec<C64>> {
    if let Some(b) = p.branch {
        let k = curve.branch_index(b);
        let x0 = periods.x0();
        let yk = continue_on_polyline(curve, &[x0, p.x], &curve.principal_point(x0).y);
        let mut s = 0u32;
        for j in 0..curve.n() {
            if j != b.factor && (p.y[j] + yk[j]).norm() < (p.y[j] - yk[j]).norm() {
                s |= 1 << j;
            }
        }
        return Ok(integral_to_branch(curve, periods, k, Sheet(s)));
    }
    let clearance = 1e-3 * curve.min_branch_separation();
    let path = route(curve, periods.x0(), p.x, clearance)?;
    integral_along(curve, periods, p, &path)
}

/// Direction of the ray from `x0` to infinity used to reach the points over
/// infinity: the one staying farthest from all branch points.
pub fn infinity_direction(curve: &FiberProductCurve, x0: C64) -> C64 {
    let mut best = (f64::NEG_INFINITY, C64::new(1.0, 0.0));
    for a in 0..144 {
        let dir = C64::from_polar(1.0, std::f64::consts::TAU * a as f64 / 144.0);
        let score = curve
            .lambdas()
            .iter()
            .map(|&l| {
                let t = ((l - x0) * dir.conj()).re.max(0.0);
                (x0 + dir * t - l).norm()
            })
            .fold(f64::INFINITY, f64::min);
        if score > best.0 {
            best = (score, dir);
        }
    }
    best.1
}

/// Non-normalized integral from `(x0, 0)` to the point over infinity reached
/// along the ray from `(x0, s)`.
pub fn integral_to_infinity(curve: &FiberProductCurve, periods: &PeriodData, s: Sheet) -> Result<Vec<C64>> {
    let x0 = periods.x0();
    let dir = infinity_direction(curve, x0);
    let y0 = curve.principal_point(x0).y;
    let basis = &periods.basis;
    let q = QuadratureOptions { rel_tol: 1e-12, abs_tol: 1e-15, ..Default::default() };
    let r = integrate(
        |u| {
            let t = u / (1.0 - u);
            let x = x0 + dir * t;
            let dxdu = dir / ((1.0 - u) * (1.0 - u));
            let y: Vec<C64> = curve
                .factors()
                .iter()
                .zip(&y0)
                .map(|(f, &ya)| {
                    ya * f.branch_points.iter().fold(C64::new(1.0, 0.0), |acc, &l| acc * ((x - l) / (x0 - l)).sqrt())
                })
                .collect();
            basis
                .iter()
                .map(|d| {
                    let mut den = C64::new(1.0, 0.0);
                    for (j, &yj) in y.iter().enumerate() {
                        if d.uses_factor(j) {
                            den *= yj;
                        }
                    }
                    dxdu * x.powu(d.l as u32) / den
                })
                .collect()
        },
        0.0,
        1.0,
        basis.len(),
        &q,
    )?;
    let mut out = sheet_transfer(curve, periods, s);
    for (i, d) in basis.iter().enumerate() {
        out[i] += r.value[i] * character(d.v, s);
    }
    Ok(out)
}

pub fn normalized(periods: &PeriodData, w: &[C64]) -> JacobianPoint {
    JacobianPoint { value: periods.normalize(w).iter().copied().collect(), reduced: false }
}

/// `u(p) - u(z0)`, lattice-reduced.
pub fn abel_map(curve: &FiberProductCurve, periods: &PeriodData, p: &SurfacePoint, z0: &SurfacePoint) -> Result<JacobianPoint> {
    let a = integral_to_point(curve, periods, p)?;
    let b = integral_to_point(curve, periods, z0)?;
    let diff: Vec<C64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    Ok(reduce(periods, &normalized(periods, &diff).value))
}

/// `u` of the reduced fiber over `lambda_k` (the `2^{n-1}` ramification points).
pub fn fiber_sum(curve: &FiberProductCurve, periods: &PeriodData, k: usize) -> Vec<C64> {
    let j = curve.branch_id(k).factor;
    let mut out = zero_vec(periods.genus());
    for s in 0..curve.sheet_count() as u32 {
        if s >> j & 1 == 0 {
            for (o, v) in out.iter_mut().zip(integral_to_branch(curve, periods, k, Sheet(s))) {
                *o += v;
            }
        }
    }
    out
}

pub fn infinity_sum(curve: &FiberProductCurve, periods: &PeriodData) -> Result<Vec<C64>> {
    let mut out = zero_vec(periods.genus());
    for s in 0..curve.sheet_count() as u32 {
        for (o, v) in out.iter_mut().zip(integral_to_infinity(curve, periods, Sheet(s))?) {
            *o += v;
        }
    }
    Ok(out)
}

/// Normalized `u(div dx)`: ramification points minus twice the points over infinity.
pub fn canonical_class(curve: &FiberProductCurve, periods: &PeriodData) -> Result<Vec<C64>> {
    let mut w = zero_vec(periods.genus());
    for k in 0..curve.branch_count() {
        for (o, v) in w.iter_mut().zip(fiber_sum(curve, periods, k)) {
            *o += v;
        }
    }
    for (o, v) in w.iter_mut().zip(infinity_sum(curve, periods)?) {
        *o -= 2.0 * v;
    }
    Ok(normalized(periods, &w).value)
}

/// A regular point with coordinates drawn from `rng`, kept away from the
/// branch points.
pub fn random_regular_point<R: Rng>(curve: &FiberProductCurve, rng: &mut R) -> SurfacePoint {
    let lambdas = curve.lambdas();
    let center = lambdas.iter().sum::<C64>() / lambdas.len() as f64;
    let spread = lambdas.iter().map(|l| (l - center).norm()).fold(0.0, f64::max).max(1.0);
    let sep = curve.min_branch_separation();
    loop {
        let x = center + C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * spread;
        if lambdas.iter().all(|&l| (l - x).norm() > 0.1 * sep) {
            let s = rng.gen_range(0..curve.sheet_count() as u32);
            return curve.point_with_signs(x, Sheet(s));
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RiemannConstant {
    pub value: JacobianPoint,
    /// Sign of `u(div dx) / 2` in the selected candidate.
    pub sign: i8,
    /// Half-period `(p + tau q) / 2` added, as `(p, q)`.
    pub half_period: (Vec<u8>, Vec<u8>),
    /// Normalized vanishing score of the best and second best candidates.
    pub best_score: f64,
    pub runner_up: f64,
}

/// The Riemann constant for base point `(x0, 0)`. It satisfies
/// `2K = -u(div dx)`, so it is one of `4^g` translates of `-u(div dx)/2` by
/// half-periods; the translate is the one for which `theta(u(D) + K)`
/// vanishes on effective divisors `D` of degree `g - 1`. Both signs of
/// `u(div dx)/2` are searched.
pub fn riemann_constant<R: Rng>(curve: &FiberProductCurve, periods: &PeriodData, rng: &mut R) -> Result<RiemannConstant> {
    let g = periods.genus();
    if g == 0 {
        return Ok(RiemannConstant {
            value: JacobianPoint::zero(0),
            sign: -1,
            half_period: (vec![], vec![]),
            best_score: 0.0,
            runner_up: 1.0,
        });
    }
    let ctx = ThetaContext::new(&periods.tau, 1e-13)?;
    let kx = canonical_class(curve, periods)?;
    let mut divisors = Vec::new();
    for _ in 0..2 {
        let mut acc = zero_vec(g);
        for _ in 0..g - 1 {
            let p = random_regular_point(curve, rng);
            for (a, v) in acc.iter_mut().zip(normalized(periods, &integral_to_point(curve, periods, &p)?).value) {
                *a += v;
            }
        }
        divisors.push(acc);
    }
    let mut candidates: Vec<(JacobianPoint, i8, Vec<u8>, Vec<u8>)> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for sign in [-1i8, 1] {
        for code in 0u32..1 << (2 * g) {
            let p: Vec<u8> = (0..g).map(|i| (code >> i & 1) as u8).collect();
            let q: Vec<u8> = (0..g).map(|i| (code >> (g + i) & 1) as u8).collect();
            let ch = Characteristic { a: q.iter().map(|&v| v as f64 / 2.0).collect(), b: p.iter().map(|&v| v as f64 / 2.0).collect() };
            let hp = ctx.point_of(&ch);
            let w: Vec<C64> = kx.iter().zip(&hp).map(|(k, h)| k * (sign as f64 / 2.0) + h).collect();
            let (lp, lq) = lattice_coordinates(periods, &w);
            let key: Vec<i64> = lp.iter().chain(&lq).map(|v| ((v - v.floor()) * 1e6).round() as i64 % 1_000_000).collect();
            if seen.insert(key) {
                candidates.push((reduce(periods, &w), sign, p, q));
            }
        }
    }
    let mut scores = vec![0.0f64; candidates.len()];
    for d in &divisors {
        let mods: Vec<f64> = candidates
            .iter()
            .map(|c| {
                let z: Vec<C64> = c.0.value.iter().zip(d).map(|(a, b)| a + b).collect();
                let zr = reduce(periods, &z);
                ctx.invariant_modulus(&zr.value)
            })
            .collect::<Result<_>>()?;
        let scale = mods.iter().copied().fold(0.0, f64::max).max(1e-300);
        for (s, m) in scores.iter_mut().zip(mods) {
            *s = s.max(m / scale);
        }
    }
    let mut idx: Vec<usize> = (0..candidates.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    let best = idx[0];
    let runner_up = idx.get(1).map_or(1.0, |&i| scores[i]);
    if !(scores[best] < 1e-6 && runner_up > 1e-4) {
        return Err(Error::Hypothesis(format!(
            "Riemann constant search is ambiguous (best {:.2e}, runner-up {:.2e})",
            scores[best], runner_up
        )));
    }
    let (value, sign, p, q) = candidates.swap_remove(best);
    Ok(RiemannConstant { value, sign, half_period: (p, q), best_score: scores[best], runner_up })
}

/// Riemann constant of a nearby curve: tries the candidate with the sign and
/// half-period of `hint` first and falls back to the full search if it does
/// not vanish on a random effective divisor.
pub fn riemann_constant_near<R: Rng>(
    curve: &FiberProductCurve,
    periods: &PeriodData,
    hint: &RiemannConstant,
    rng: &mut R,
) -> Result<RiemannConstant> {
    let g = periods.genus();
    if g <= 1 {
        return riemann_constant(curve, periods, rng);
    }
    let ctx = ThetaContext::new(&periods.tau, 1e-13)?;
    let kx = canonical_class(curve, periods)?;
    let (p, q) = &hint.half_period;
    let ch = Characteristic { a: q.iter().map(|&v| v as f64 / 2.0).collect(), b: p.iter().map(|&v| v as f64 / 2.0).collect() };
    let hp = ctx.point_of(&ch);
    let w: Vec<C64> = kx.iter().zip(&hp).map(|(k, h)| k * (hint.sign as f64 / 2.0) + h).collect();
    let kappa = reduce(periods, &w);
    let mut acc = zero_vec(g);
    for _ in 0..g - 1 {
        let pt = random_regular_point(curve, rng);
        for (a, v) in acc.iter_mut().zip(normalized(periods, &integral_to_point(curve, periods, &pt)?).value) {
            *a += v;
        }
    }
    let at = |shift: f64| -> Result<f64> {
        let z: Vec<C64> = kappa.value.iter().zip(&acc).enumerate().map(|(i, (a, b))| a + b + if i == 0 { shift } else { 0.0 }).collect();
        ctx.invariant_modulus(&reduce(periods, &z).value)
    };
    let score = at(0.0)? / at(0.5)?.max(at(0.25)?).max(1e-300);
    if score < 1e-8 {
        return Ok(RiemannConstant { value: kappa, sign: hint.sign, half_period: hint.half_period.clone(), best_score: score, runner_up: hint.runner_up });
    }
    riemann_constant(curve, periods, rng)
}

/// `e_beta = u(sum_k beta_k phi^{-1}(lambda_k) - sum infinity) + K`, reduced.
pub fn divisor_to_e(
    curve: &FiberProductCurve,
    periods: &PeriodData,
    beta: &BetaVector,
    k_const: &JacobianPoint,
) -> Result<JacobianPoint> {
    beta.check_shape(curve)?;
    let g = periods.genus();
    let mut w = zero_vec(g);
    for (k, b) in beta.flat().into_iter().enumerate() {
        if b == 1 {
            for (o, v) in w.iter_mut().zip(fiber_sum(curve, periods, k)) {
                *o += v;
            }
        }
    }
    for (o, v) in w.iter_mut().zip(infinity_sum(curve, periods)?) {
        *o -= v;
    }
    let u = normalized(periods, &w);
    Ok(reduce(periods, &u.add(k_const).value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::periods::compute_periods_default;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn real_curve(n: usize, rows: &[&[f64]]) -> FiberProductCurve {
        let m = rows[0].len() / 2;
        FiberProductCurve::validate(n, m, rows.iter().map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect()).collect())
            .unwrap()
    }

    #[test]
    fn abel_map_basics() {
        let x = real_curve(1, &[&[-1.0 / 3.0, -1.0, 1.0, 1.0 / 3.0]]);
        let per = compute_periods_default(&x).unwrap();
        let z0 = x.principal_point(per.x0());
        let u = abel_map(&x, &per, &z0, &z0).unwrap();
        assert!(lattice_distance(&per, &u.value) < 1e-14);
        let p = x.point_with_signs(C64::new(0.6, -0.4), Sheet(1));
        let clearance = 1e-3 * x.min_branch_separation();
        let direct = route(&x, per.x0(), p.x, clearance).unwrap();
        let detour = vec![per.x0(), C64::new(-2.0, 1.5), C64::new(-1.5, -2.0), p.x];
        let a = normalized(&per, &integral_along(&x, &per, &p, &direct).unwrap());
        let b = normalized(&per, &integral_along(&x, &per, &p, &detour).unwrap());
        let diff: Vec<C64> = a.value.iter().zip(&b.value).map(|(s, t)| s - t).collect();
        assert!(lattice_distance(&per, &diff) < 1e-9);
        let idem = reduce(&per, &reduce(&per, &a.value).value);
        let once = reduce(&per, &a.value);
        assert!((idem.value[0] - once.value[0]).norm() < 1e-14);
    }

    #[test]
    fn fiber_sums_are_linearly_equivalent() {
        let x = real_curve(1, &[&[-1.0 / 3.0, -1.0, 1.0, 1.0 / 3.0]]);
        let per = compute_periods_default(&x).unwrap();
        let fiber = |c: C64| -> Vec<C64> {
            let mut acc = vec![C64::new(0.0, 0.0); 1];
            for s in 0..2 {
                let p = x.point_with_signs(c, Sheet(s));
                let v = normalized(&per, &integral_to_point(&x, &per, &p).unwrap()).value;
                acc[0] += v[0];
            }
            acc
        };
        let f1 = fiber(C64::new(0.5, 0.9));
        let f2 = fiber(C64::new(-2.0, -0.3));
        assert!(lattice_distance(&per, &[f1[0] - f2[0]]) < 1e-9);
        // the fiber over infinity and over a branch point are in the same class
        let inf = normalized(&per, &infinity_sum(&x, &per).unwrap()).value;
        assert!(lattice_distance(&per, &[inf[0] - f1[0]]) < 1e-9);
        let br = normalized(&per, &fiber_sum(&x, &per, 0)).value;
        assert!(lattice_distance(&per, &[2.0 * br[0] - f1[0]]) < 1e-9);
    }

    #[test]
    fn genus_one_riemann_constant_is_odd_half_period() {
        let x = real_curve(1, &[&[-1.0 / 3.0, -1.0, 1.0, 1.0 / 3.0]]);
        let per = compute_periods_default(&x).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let k = riemann_constant(&x, &per, &mut rng).unwrap();
        let expect = (C64::new(1.0, 0.0) + per.tau[(0, 0)]) * 0.5;
        assert!(lattice_distance(&per, &[k.value.value[0] - expect]) < 1e-9);
    }

    #[test]
    fn riemann_vanishing_in_genus_two() {
        let x = real_curve(1, &[&[-2.0, -1.0, -0.5, 0.5, 1.2, 2.5]]);
        let per = compute_periods_default(&x).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let k = riemann_constant(&x, &per, &mut rng).unwrap();
        let ctx = ThetaContext::new(&per.tau, 1e-13).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..5 {
            let p = random_regular_point(&x, &mut rng);
            let u = normalized(&per, &integral_to_point(&x, &per, &p).unwrap());
            let z = reduce(&per, &u.add(&k.value).value);
            assert!(ctx.invariant_modulus(&z.value).unwrap() < 1e-9);
        }
    }
}
