//! The algebraic Szegő kernel `F_beta(P, Q)`, its local expansion, the
//! symmetric bidifferential `xi`, and comparisons with theta-side quantities.

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::constants::SZEGO_C2_SCALE;
use crate::curve::{character, FiberProductCurve, Sheet, SurfacePoint, C64};
use crate::divisor::{q_form, rational_to_f64, BetaVector};
use crate::error::{Error, Result};
use crate::surface::continuation::continue_on_segment;
use crate::surface::jacobian::{divisor_to_e, integral_to_point, lattice_distance, normalized, route, JacobianPoint};
use crate::surface::periods::PeriodData;
use crate::theta::{Characteristic, ThetaContext};

/// Below this `|x1 - x2|` two points are treated as lying in the same fiber.
const SAME_FIBER: f64 = 1e-14;

/// `f_{beta,v}(x) = prod (x - lambda_k)^{e_k}` with `e_k = {(beta_k + v_j)/2} - 1/4`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionalPowerProduct {
    pub beta: BetaVector,
    pub v: u32,
    pub exponents: Vec<Rational64>,
}

impl FractionalPowerProduct {
    pub fn new(curve: &FiberProductCurve, beta: &BetaVector, v: u32) -> Result<Self> {
        beta.check_shape(curve)?;
        let exponents = (0..curve.branch_count())
            .map(|k| {
                let b = curve.branch_id(k);
                if (beta.get(b) as u32 + (v >> b.factor & 1)) % 2 == 1 {
                    Rational64::new(1, 4)
                } else {
                    Rational64::new(-1, 4)
                }
            })
            .collect();
        Ok(FractionalPowerProduct { beta: beta.clone(), v, exponents })
    }

    /// `log f(x_end) - log f(x_start)` continued along `path`.
    pub fn log_ratio(&self, curve: &FiberProductCurve, path: &[C64]) -> C64 {
        let logs = path_logs(curve, path);
        self.exponents.iter().zip(&logs).map(|(&e, &l)| l * rational_to_f64(e)).sum()
    }
}

/// `log(x_end - lambda_k) - log(x_start - lambda_k)` along a polyline, per branch point.
fn path_logs(curve: &FiberProductCurve, path: &[C64]) -> Vec<C64> {
    curve
        .lambdas()
        .iter()
        .map(|&l| path.windows(2).map(|w| ((w[1] - l) / (w[0] - l)).ln()).sum())
        .collect()
}

fn half_minus_beta(curve: &FiberProductCurve, beta: &BetaVector) -> Vec<f64> {
    (0..curve.branch_count()).map(|k| 0.5 - beta.get(curve.branch_id(k)) as f64).collect()
}

fn sheet_difference(reference: &[C64], y: &[C64]) -> Sheet {
    let mut s = 0u32;
    for (j, (r, v)) in reference.iter().zip(y).enumerate() {
        if (v + r).norm() < (v - r).norm() {
            s |= 1 << j;
        }
    }
    Sheet(s)
}

/// `F_beta(P, Q)` relative to `sqrt(dx1) sqrt(dx2)`, with `x1 = x(P)`, `x2 = x(Q)`.
pub fn szego_algebraic(curve: &FiberProductCurve, beta: &BetaVector, p: &SurfacePoint, q: &SurfacePoint) -> Result<C64> {
    beta.check_shape(curve)?;
    let (x1, x2) = (p.x, q.x);
    if (x1 - x2).norm() <= SAME_FIBER * (1.0 + x2.norm()) {
        let s = sheet_difference(&q.y, &p.y);
        return match s.0.count_ones() {
            0 => Err(Error::CoincidentPoints),
            1 => {
                let j = s.0.trailing_zeros() as usize;
                let b = half_minus_beta(curve, beta);
                let l: C64 = (0..curve.branch_count())
                    .filter(|&k| curve.branch_id(k).factor == j)
                    .map(|k| b[k] / (x2 - curve.lambda(k)))
                    .sum();
                Ok(l * 0.5)
            }
            _ => Ok(C64::new(0.0, 0.0)),
        };
    }
    let clearance = 1e-3 * curve.min_branch_separation();
    let path = route(curve, x2, x1, clearance)?;
    let mut y = q.y.clone();
    for w in path.windows(2) {
        y = continue_on_segment(curve, w[0], &y, w[1], 1.0);
    }
    let s = sheet_difference(&y, &p.y);
    let logs = path_logs(curve, &path);
    let mut sum = C64::new(0.0, 0.0);
    for v in 0u32..curve.sheet_count() as u32 {
        let f = FractionalPowerProduct::new(curve, beta, v)?;
        let lr: C64 = f.exponents.iter().zip(&logs).map(|(&e, &l)| l * rational_to_f64(e)).sum();
        sum += lr.exp() * character(v, s);
    }
    Ok(sum / (curve.sheet_count() as f64 * (x2 - x1)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionFit {
    pub c0: C64,
    pub c1: C64,
    pub c2: C64,
    /// Size of the fitted tail `max_{p >= N/2} |c_p| r^p`, relative to `|c0|`.
    pub residual: f64,
    pub radius: f64,
}

/// Taylor coefficients of `h(eps)` at 0 from `samples` equispaced values on
/// `|eps| = radius`.
pub fn circle_coefficients<F>(mut h: F, radius: f64, samples: usize) -> Result<Vec<C64>>
where
    F: FnMut(C64) -> Result<C64>,
{
    let vals: Vec<(C64, C64)> = (0..samples)
        .map(|k| {
            let eps = C64::from_polar(radius, std::f64::consts::TAU * k as f64 / samples as f64);
            h(eps).map(|v| (eps, v))
        })
        .collect::<Result<_>>()?;
    Ok((0..samples)
        .map(|p| vals.iter().map(|(e, v)| v * e.powi(-(p as i32))).sum::<C64>() / samples as f64)
        .collect())
}

fn fit_from_coefficients(c: &[C64], radius: f64) -> Result<ExpansionFit> {
    let n = c.len();
    let tail = (n / 2..n).map(|p| c[p].norm() * radius.powi(p as i32)).fold(0.0, f64::max);
    let residual = tail / c[0].norm().max(1e-300);
    if !(residual < 1e-8) {
        return Err(Error::FitDiverged(residual));
    }
    Ok(ExpansionFit { c0: c[0], c1: c[1], c2: c[2], residual, radius })
}

fn default_radius(curve: &FiberProductCurve, x: C64) -> f64 {
    0.1 * curve.lambdas().iter().map(|&l| (l - x).norm()).fold(f64::INFINITY, f64::min)
}

/// Expansion coefficients of `F_beta(P, Q) (x2 - x1)` in `x1 - x2`, with `Q`
/// fixed and `P` running over a small circle on the sheet of `Q`.
pub fn szego_expansion_fit(curve: &FiberProductCurve, beta: &BetaVector, q: &SurfacePoint) -> Result<ExpansionFit> {
    let r = default_radius(curve, q.x);
    let c = circle_coefficients(|eps| local_kernel(curve, beta, q, eps), r, 64)?;
    fit_from_coefficients(&c, r)
}

fn local_kernel(curve: &FiberProductCurve, beta: &BetaVector, q: &SurfacePoint, eps: C64) -> Result<C64> {
    let x1 = q.x + eps;
    let y = continue_on_segment(curve, q.x, &q.y, x1, 1.0);
    let p = SurfacePoint { x: x1, y, branch: None };
    Ok(szego_algebraic(curve, beta, &p, q)? * (q.x - x1))
}

/// `1/2 sum_{i,j} q_ij / ((x - lambda_i)(x - lambda_j))` over all ordered
/// pairs, the diagonal included.
pub fn q_pole_sum(curve: &FiberProductCurve, beta: &BetaVector, x: C64) -> C64 {
    let n = curve.branch_count();
    let d: Vec<C64> = (0..n).map(|k| x - curve.lambda(k)).collect();
    let mut sum = C64::new(0.0, 0.0);
    for a in 0..n {
        for b in 0..n {
            let q = rational_to_f64(q_form(curve, beta, curve.branch_id(a), curve.branch_id(b)));
            sum += q / (d[a] * d[b]);
        }
    }
    sum * 0.5
}

/// Predicted second-order coefficient of `F_beta (x2 - x1)` at `x2 = x`.
pub fn szego_c2_prediction(curve: &FiberProductCurve, beta: &BetaVector, x: C64) -> C64 {
    q_pole_sum(curve, beta, x) * SZEGO_C2_SCALE
}

/// `||grad theta[e](0)|| / |theta[e](0)|`.
pub fn theta_side_gradcheck(ctx: &ThetaContext, ch: &Characteristic) -> Result<f64> {
    let z = vec![C64::new(0.0, 0.0); ctx.genus()];
    let t = ctx.eval_char(ch, &z, 1)?;
    let grad = t.grad.unwrap_or_default();
    let norm = grad.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    Ok(norm / t.value.norm().max(1e-300))
}

/// `xi(P, Q)` relative to `dz(P) dz(Q)`, keeping the two pinned coefficients
/// `A0 = prod_{j in v} f_j(w)` and `A1 = A0'(w) / 2` of each summand.
pub fn xi_form(curve: &FiberProductCurve, p: &SurfacePoint, q: &SurfacePoint) -> Result<C64> {
    let (z, w) = (p.x, q.x);
    let n = curve.n();
    let fw: Vec<C64> = curve.factors().iter().map(|f| f.eval(w)).collect();
    let lw: Vec<C64> = curve.factors().iter().map(|f| f.log_derivative(w)).collect();
    if (z - w).norm() <= SAME_FIBER * (1.0 + w.norm()) {
        let s = sheet_difference(&q.y, &p.y);
        if s.0 == 0 {
            return Err(Error::CoincidentPoints);
        }
        let dl: Vec<C64> = curve
            .factors()
            .iter()
            .map(|f| -f.branch_points.iter().map(|&l| (w - l).powi(-2)).sum::<C64>())
            .collect();
        let mut sum = C64::new(0.0, 0.0);
        for v in 0u32..1 << n {
            let u: C64 = (0..n).filter(|&j| v >> j & 1 == 1).map(|j| lw[j]).sum();
            let du: C64 = (0..n).filter(|&j| v >> j & 1 == 1).map(|j| dl[j]).sum();
            sum += (-u * u / 8.0 - du / 4.0) * character(v, s);
        }
        return Ok(sum / (1u32 << n) as f64);
    }
    let mut sum = C64::new(0.0, 0.0);
    for v in 0u32..1 << n {
        let mut a0 = C64::new(1.0, 0.0);
        let mut u = C64::new(0.0, 0.0);
        let mut den = C64::new(1.0, 0.0);
        for j in 0..n {
            if v >> j & 1 == 1 {
                a0 *= fw[j];
                u += lw[j];
                den *= p.y[j] * q.y[j];
            }
        }
        let a1 = a0 * u * 0.5;
        sum += (a0 + a1 * (z - w)) / den;
    }
    Ok(sum / ((1u32 << n) as f64 * (z - w) * (z - w)))
}

/// Expansion of `(z - w)^2 xi(P, Q)` with `P` circling `Q` on its sheet.
pub fn xi_expansion_fit(curve: &FiberProductCurve, q: &SurfacePoint) -> Result<ExpansionFit> {
    let r = default_radius(curve, q.x);
    let c = circle_coefficients(
        |eps| {
            let z = q.x + eps;
            let y = continue_on_segment(curve, q.x, &q.y, z, 1.0);
            Ok(xi_form(curve, &SurfacePoint { x: z, y, branch: None }, q)? * eps * eps)
        },
        r,
        64,
    )?;
    fit_from_coefficients(&c, r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FayProduct {
    pub fit: ExpansionFit,
    pub predicted: C64,
    /// Lattice distance of `e_beta + e_{complement}` from zero.
    pub reflection_residual: f64,
    pub relative_error: f64,
}

/// Second-order coefficient of `F_beta F_{complement} (x1 - x2)^2` against
/// `1/2 sum_{i,j} q_ij / ((x2 - lambda_i)(x2 - lambda_j))`. The complement
/// must realize `-e_beta`; this is verified first.
pub fn fay_bilinear_check(
    curve: &FiberProductCurve,
    periods: &PeriodData,
    beta: &BetaVector,
    k_const: &JacobianPoint,
    q: &SurfacePoint,
) -> Result<FayProduct> {
    let comp = beta.complement();
    let e = divisor_to_e(curve, periods, beta, k_const)?;
    let ec = divisor_to_e(curve, periods, &comp, k_const)?;
    let sum: Vec<C64> = e.value.iter().zip(&ec.value).map(|(a, b)| a + b).collect();
    let reflection_residual = lattice_distance(periods, &sum);
    if reflection_residual > 1e-6 {
        return Err(Error::Hypothesis(format!(
            "complementary beta does not realize -e (lattice residual {reflection_residual:.2e})"
        )));
    }
    let r = default_radius(curve, q.x);
    let c = circle_coefficients(
        |eps| Ok(local_kernel(curve, beta, q, eps)? * local_kernel(curve, &comp, q, eps)?),
        r,
        64,
    )?;
    let fit = fit_from_coefficients(&c, r)?;
    let predicted = q_pole_sum(curve, beta, q.x);
    let relative_error = (fit.c2 - predicted).norm() / predicted.norm().max(1e-300);
    Ok(FayProduct { fit, predicted, reflection_residual, relative_error })
}

/// Genus-one theta-side Szegő kernel squared,
/// `(theta[e](w) theta_1'(0) / (theta[e](0) theta_1(w)))^2 v(P) v(Q)` with
/// `w = u(P) - u(Q)`, relative to `dx1 dx2`.
pub fn szego_theta_genus_one_squared(
    curve: &FiberProductCurve,
    periods: &PeriodData,
    ch: &Characteristic,
    p: &SurfacePoint,
    q: &SurfacePoint,
) -> Result<C64> {
    if periods.genus() != 1 {
        return Err(Error::Config("genus-one oracle needs a genus-one curve".into()));
    }
    let ctx = ThetaContext::new(&periods.tau, 1e-14)?;
    let up = normalized(periods, &integral_to_point(curve, periods, p)?).value[0];
    let uq = normalized(periods, &integral_to_point(curve, periods, q)?).value[0];
    let w = vec![up - uq];
    let zero = vec![C64::new(0.0, 0.0)];
    let odd = Characteristic { a: vec![0.5], b: vec![0.5] };
    let d1 = ctx.eval_char(&odd, &zero, 1)?.grad.unwrap_or_default()[0];
    let t1 = ctx.eval_char(&odd, &w, 0)?.value;
    let te = ctx.eval_char(ch, &w, 0)?.value;
    let t0 = ctx.eval_char(ch, &zero, 0)?.value;
    let d = curve.differential_basis()[0];
    let vp = periods.normalize(&[curve.evaluate_differential(d, p)?])[0];
    let vq = periods.normalize(&[curve.evaluate_differential(d, q)?])[0];
    let s = te * d1 / (t0 * t1);
    Ok(s * s * vp * vq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divisor::enumerate_admissible;
    use crate::surface::jacobian::riemann_constant;
    use crate::surface::periods::compute_periods_default;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn real_curve(n: usize, rows: &[&[f64]]) -> FiberProductCurve {
        let m = rows[0].len() / 2;
        FiberProductCurve::validate(n, m, rows.iter().map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect()).collect())
            .unwrap()
    }

    #[test]
    fn exponents_are_quarter_and_balanced() {
        let x = real_curve(2, &[&[-2.0, -1.0, 1.0, 2.0], &[-3.0, -1.5, 1.5, 3.0]]);
        for beta in enumerate_admissible(&x) {
            for v in 0..4 {
                let f = FractionalPowerProduct::new(&x, &beta, v).unwrap();
                assert!(f.exponents.iter().all(|e| *e == Rational64::new(1, 4) || *e == Rational64::new(-1, 4)));
                assert_eq!(f.exponents.iter().sum::<Rational64>(), Rational64::from_integer(0));
            }
        }
    }

    #[test]
    fn szego_regular_on_fiber_and_symmetric_modulus() {
        let x = real_curve(2, &[&[-2.0, -1.0, 1.0, 2.0], &[-3.0, -1.5, 1.5, 3.0]]);
        let beta = BetaVector::new(vec![vec![1, 1, 0, 0], vec![0, 1, 0, 1]]);
        let q = x.point_with_signs(C64::new(0.3, 0.4), Sheet(0));
        let p = x.point_with_signs(C64::new(0.3, 0.4), Sheet(1));
        let lim = szego_algebraic(&x, &beta, &p, &q).unwrap();
        for h in [1e-3, 1e-5, 1e-7] {
            let pe = x.point_with_signs(C64::new(0.3 + h, 0.4), Sheet(1));
            let pe = SurfacePoint { y: continue_on_segment(&x, p.x, &p.y, pe.x, 1.0), ..pe };
            let v = szego_algebraic(&x, &beta, &pe, &q).unwrap();
            assert!((v - lim).norm() < 10.0 * h * (1.0 + lim.norm()), "{h} {v} {lim}");
        }
        let a = x.point_with_signs(C64::new(0.5, -0.7), Sheet(2));
        let b = x.point_with_signs(C64::new(-0.4, 0.2), Sheet(1));
        let f = szego_algebraic(&x, &beta, &a, &b).unwrap();
        for g in 0..4u32 {
            let (ga, gb) = (x.point_with_signs(a.x, Sheet(2 ^ g)), x.point_with_signs(b.x, Sheet(1 ^ g)));
            let fg = szego_algebraic(&x, &beta, &ga, &gb).unwrap();
            assert!((fg.norm() - f.norm()).abs() < 1e-9 * f.norm());
        }
    }

    #[test]
    fn expansion_leading_terms() {
        let x = real_curve(1, &[&[-2.0, -1.0, -0.5, 0.5, 1.2, 2.5]]);
        let beta = BetaVector::new(vec![vec![1, 0, 1, 0, 0, 1]]);
        let q = x.point_with_signs(C64::new(0.1, 0.7), Sheet(1));
        let fit = szego_expansion_fit(&x, &beta, &q).unwrap();
        assert!((fit.c0 - 1.0).norm() < 1e-8);
        assert!(fit.c1.norm() < 1e-8);
        let pred = szego_c2_prediction(&x, &beta, q.x);
        assert!((fit.c2 - pred).norm() < 1e-6 * pred.norm(), "{} {}", fit.c2, pred);
    }

    #[test]
    fn c2_calibration_on_genus_one() {
        let x = real_curve(1, &[&[-1.0 / 3.0, -1.0, 1.0, 1.0 / 3.0]]);
        let beta = BetaVector::new(vec![vec![1, 1, 0, 0]]);
        let q = x.point_with_signs(C64::new(0.2, 0.5), Sheet(0));
        let fit = szego_expansion_fit(&x, &beta, &q).unwrap();
        let ratio = fit.c2 / q_pole_sum(&x, &beta, q.x);
        assert!((ratio - SZEGO_C2_SCALE).norm() < 1e-9, "{ratio}");
    }

    #[test]
    fn genus_one_theta_oracle() {
        let x = real_curve(1, &[&[-1.0 / 3.0, -1.0, 1.0, 1.0 / 3.0]]);
        let per = compute_periods_default(&x).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let k = riemann_constant(&x, &per, &mut rng).unwrap();
        let ctx = ThetaContext::new(&per.tau, 1e-14).unwrap();
        let p = x.point_with_signs(C64::new(0.4, 0.6), Sheet(0));
        let q = x.point_with_signs(C64::new(-0.7, -0.3), Sheet(1));
        for beta in enumerate_admissible(&x) {
            let e = divisor_to_e(&x, &per, &beta, &k.value).unwrap();
            let ch = ctx.characteristic_of(&e.value).snap_half(1e-6);
            let alg = szego_algebraic(&x, &beta, &p, &q).unwrap();
            let th = szego_theta_genus_one_squared(&x, &per, &ch, &p, &q).unwrap();
            assert!((alg * alg - th).norm() < 1e-6 * th.norm(), "{beta:?} {} {}", alg * alg, th);
        }
    }

    #[test]
    fn xi_regular_and_diagonal() {
        let x = real_curve(2, &[&[-2.0, -1.0, 1.0, 2.0], &[-3.0, -1.5, 1.5, 3.0]]);
        let q = x.point_with_signs(C64::new(0.3, 0.4), Sheet(0));
        let fit = xi_expansion_fit(&x, &q).unwrap();
        assert!((fit.c0 - 1.0).norm() < 1e-8);
        assert!(fit.c1.norm() < 1e-8);
        for s in 1..4 {
            let p = x.point_with_signs(q.x, Sheet(s));
            let lim = xi_form(&x, &p, &q).unwrap();
            let h = 1e-5;
            let z = q.x + h;
            let pe = SurfacePoint { x: z, y: continue_on_segment(&x, p.x, &p.y, z, 1.0), branch: None };
            let v = xi_form(&x, &pe, &q).unwrap();
            assert!((v - lim).norm() < 1e-3 * (1.0 + lim.norm()), "{s} {v} {lim}");
        }
    }

    #[test]
    fn fay_product_genus_two() {
        let x = real_curve(1, &[&[-2.0, -1.0, -0.5, 0.5, 1.2, 2.5]]);
        let per = compute_periods_default(&x).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let k = riemann_constant(&x, &per, &mut rng).unwrap();
        let beta = BetaVector::new(vec![vec![1, 0, 1, 0, 0, 1]]);
        let q = x.point_with_signs(C64::new(0.1, 0.7), Sheet(0));
        let r = fay_bilinear_check(&x, &per, &beta, &k.value, &q).unwrap();
        assert!(r.relative_error < 1e-6, "{r:?}");
    }
}
