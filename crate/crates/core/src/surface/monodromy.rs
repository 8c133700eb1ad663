use serde::{Deserialize, Serialize};

use super::continuation::{continue_sheets, ContinuationOptions};
use crate::curve::{FiberProductCurve, Sheet, C64};
use crate::error::{Error, Result};

/// Sheet permutations of small loops around each branch point, all based at
/// `base_x` and reached along straight spokes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonodromyRepresentation {
    pub base_x: C64,
    /// `generators[k][s]` is the sheet reached from sheet `s` around branch `k`.
    pub generators: Vec<Vec<usize>>,
    /// Branch indices sorted by `arg(lambda_k - base_x)`.
    pub loop_order: Vec<usize>,
}

impl MonodromyRepresentation {
    pub fn is_involution(&self, k: usize) -> bool {
        let g = &self.generators[k];
        (0..g.len()).all(|s| g[g[s]] == s)
    }

    pub fn product(&self) -> Vec<usize> {
        let sheets = self.generators.first().map_or(0, Vec::len);
        let mut p: Vec<usize> = (0..sheets).collect();
        for &k in &self.loop_order {
            p = p.iter().map(|&s| self.generators[k][s]).collect();
        }
        p
    }
}

pub fn angular_order(curve: &FiberProductCurve, x0: C64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..curve.branch_count()).collect();
    order.sort_by(|&a, &b| (curve.lambda(a) - x0).arg().total_cmp(&(curve.lambda(b) - x0).arg()));
    order
}

fn identify_sheet(reference: &[C64], y: &[C64]) -> Sheet {
    let mut s = 0u32;
    for (j, (r, v)) in reference.iter().zip(y).enumerate() {
        if (v + r).norm() < (v - r).norm() {
            s |= 1 << j;
        }
    }
    Sheet(s)
}

pub fn monodromy(curve: &FiberProductCurve, base_x: C64) -> Result<MonodromyRepresentation> {
    let opts = ContinuationOptions::for_curve(curve);
    let lambdas = curve.lambdas();
    if lambdas.iter().any(|&l| (l - base_x).norm() < opts.clearance) {
        return Err(Error::ClearanceViolation {
            branch: lambdas.iter().position(|&l| (l - base_x).norm() < opts.clearance).unwrap_or(0),
            distance: 0.0,
            clearance: opts.clearance,
        });
    }
    let reference = curve.principal_point(base_x).y;
    let sheets = curve.sheet_count();
    let mut generators = Vec::with_capacity(lambdas.len());
    for (k, &lam) in lambdas.iter().enumerate() {
        let nearest = lambdas
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != k)
            .map(|(_, &l)| (l - lam).norm())
            .fold((base_x - lam).norm(), f64::min);
        let r = 0.3 * nearest;
        let dir = (lam - base_x) / (lam - base_x).norm();
        let near = lam - dir * r;
        let phi0 = (near - lam).arg();
        let mut path = vec![base_x, near];
        path.extend((1..=48).map(|s| lam + C64::from_polar(r, phi0 + std::f64::consts::TAU * s as f64 / 48.0)));
        path.push(base_x);
        let mut perm = vec![0; sheets];
        for (s, slot) in perm.iter_mut().enumerate() {
            let start = curve.point_with_signs(base_x, Sheet(s as u32));
            let tr = continue_sheets(curve, &path, &start, &opts)?;
            *slot = identify_sheet(&reference, tr.end()).0 as usize;
        }
        generators.push(perm);
    }
    Ok(MonodromyRepresentation { base_x, generators, loop_order: angular_order(curve, base_x) })
}
