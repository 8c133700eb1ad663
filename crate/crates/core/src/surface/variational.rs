use nalgebra::DMatrix;

use super::periods::{compute_periods, PeriodData, PeriodOptions};
use crate::constants::VARIATIONAL_SCALE;
use crate::curve::{BranchCoefficient, FiberProductCurve, Sheet, C64};
use crate::error::{Error, Result};

/// dt-coefficients of the normalized differentials at each ramification
/// point over `lambda_k`, one vector per point.
pub fn normalized_branch_coefficients(curve: &FiberProductCurve, periods: &PeriodData, k: usize) -> Vec<Vec<C64>> {
    let j = curve.branch_id(k).factor;
    (0..curve.sheet_count() as u32)
        .filter(|s| s >> j & 1 == 0)
        .map(|s| {
            let p = curve.branch_point_on_sheet(k, Sheet(s));
            let raw: Vec<C64> = periods
                .basis
                .iter()
                .map(|&d| match curve.branch_local_coefficient(d, k, &p) {
                    BranchCoefficient::Leading(c) => c,
                    BranchCoefficient::ZeroLeadingOrder => C64::new(0.0, 0.0),
                })
                .collect();
            periods.normalize(&raw).iter().copied().collect()
        })
        .collect()
}

/// `1/2 sum_Q v(Q) v(Q)^T` over the fiber above `lambda_k`, unscaled.
pub fn fiber_quadratic(curve: &FiberProductCurve, periods: &PeriodData, k: usize) -> DMatrix<C64> {
    let g = periods.genus();
    let mut out = DMatrix::zeros(g, g);
    for v in normalized_branch_coefficients(curve, periods, k) {
        for r in 0..g {
            for c in 0..g {
                out[(r, c)] += v[r] * v[c] * 0.5;
            }
        }
    }
    out
}

/// Predicted `d tau / d lambda_k`.
pub fn variational_prediction(curve: &FiberProductCurve, periods: &PeriodData, k: usize) -> DMatrix<C64> {
    fiber_quadratic(curve, periods, k) * VARIATIONAL_SCALE
}

/// Periods at `lambda_k + delta` with the base point held fixed.
pub fn perturbed_periods(
    curve: &FiberProductCurve,
    k: usize,
    delta: C64,
    x0: C64,
    opts: &PeriodOptions,
) -> Result<(FiberProductCurve, PeriodData)> {
    let moved = curve.with_branch_point(k, curve.lambda(k) + delta)?;
    let p = compute_periods(&moved, x0, opts)?;
    Ok((moved, p))
}

/// Central difference of an arbitrary period functional in `lambda_k`, with
/// a check that both perturbed runs used the same homology construction.
pub fn central_difference<T, F>(
    curve: &FiberProductCurve,
    k: usize,
    h: f64,
    x0: C64,
    opts: &PeriodOptions,
    mut f: F,
) -> Result<(T, T)>
where
    F: FnMut(&FiberProductCurve, &PeriodData) -> Result<T>,
{
    let (cp, pp) = perturbed_periods(curve, k, C64::new(h, 0.0), x0, opts)?;
    let (cm, pm) = perturbed_periods(curve, k, C64::new(-h, 0.0), x0, opts)?;
    if pp.homology.fingerprint != pm.homology.fingerprint {
        return Err(Error::BasisJump(format!(
            "homology changed between lambda_{k} +/- {h:e}: {} vs {}",
            &pp.homology.fingerprint[..12],
            &pm.homology.fingerprint[..12]
        )));
    }
    Ok((f(&cp, &pp)?, f(&cm, &pm)?))
}

/// `(tau(lambda_k + h) - tau(lambda_k - h)) / 2h` at fixed base point.
pub fn dtau_dlambda_fd(curve: &FiberProductCurve, k: usize, h: f64, x0: C64, opts: &PeriodOptions) -> Result<DMatrix<C64>> {
    let (tp, tm) = central_difference(curve, k, h, x0, opts, |_, p| Ok(p.tau.clone()))?;
    Ok((tp - tm) / C64::new(2.0 * h, 0.0))
}

/// `d log det C / d lambda_k` by central differences.
pub fn dlog_det_c_fd(curve: &FiberProductCurve, k: usize, h: f64, x0: C64, opts: &PeriodOptions) -> Result<C64> {
    let (dp, dm) = central_difference(curve, k, h, x0, opts, |_, p| Ok(p.det_c))?;
    Ok((dp / dm).ln() / (2.0 * h))
}

pub fn relative_error(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let diff = (a - b).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let scale = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    diff / scale.max(1e-300)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::homology::choose_base_point;

    fn real_curve(n: usize, rows: &[&[f64]]) -> FiberProductCurve {
        let m = rows[0].len() / 2;
        FiberProductCurve::validate(n, m, rows.iter().map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect()).collect())
            .unwrap()
    }

    #[test]
    fn prediction_matches_finite_differences() {
        for x in [real_curve(1, &[&[-1.0 / 3.0, -1.0, 1.0, 1.0 / 3.0]]), real_curve(1, &[&[-2.0, -1.0, -0.5, 0.5, 1.2, 2.5]])] {
            let x0 = choose_base_point(&x);
            let opts = PeriodOptions::default();
            let per = compute_periods(&x, x0, &opts).unwrap();
            for k in 0..x.branch_count() {
                let pred = variational_prediction(&x, &per, k);
                let fd = dtau_dlambda_fd(&x, k, 1e-5, x0, &opts).unwrap();
                let err = relative_error(&fd, &pred);
                assert!(err < 1e-4, "k={k} err={err:e}\n{fd}\n{pred}");
                assert!(relative_error(&pred.transpose(), &pred) < 1e-14);
            }
        }
    }
}
