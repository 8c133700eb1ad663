use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::homology::{choose_base_point, homology_basis, HomologyBasis};
use super::monodromy::monodromy;
use crate::curve::{character, DifferentialIndex, FiberProductCurve, Sheet, C64};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadratureOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeriodOptions {
    pub rel_tol: f64,
    pub max_condition: f64,
}

impl Default for PeriodOptions {
    fn default() -> Self {
        PeriodOptions { rel_tol: 1e-12, max_condition: 1e12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeriodDiagnostics {
    pub symmetry_residual: f64,
    pub min_eig_im_tau: f64,
    pub condition: f64,
    pub quadrature_error: f64,
}

#[derive(Debug, Clone)]
pub struct PeriodData {
    pub basis: Vec<DifferentialIndex>,
    pub homology: HomologyBasis,
    /// `spokes[k][d]`: integral of differential `d` from `x0` to `lambda_k` on sheet 0.
    pub spokes: Vec<Vec<C64>>,
    /// Rows are cycles, columns differentials.
    pub a: DMatrix<C64>,
    pub b: DMatrix<C64>,
    pub tau: DMatrix<C64>,
    pub a_inv: DMatrix<C64>,
    pub det_c: C64,
    pub diagnostics: PeriodDiagnostics,
}

impl PeriodData {
    pub fn x0(&self) -> C64 {
        self.homology.graph.x0
    }

    pub fn genus(&self) -> usize {
        self.basis.len()
    }

    pub fn im_tau(&self) -> DMatrix<f64> {
        self.tau.map(|z| z.im)
    }

    /// Integral of each basis differential over edge `e(k, s)`.
    pub fn edge_integral(&self, k: usize, s: Sheet) -> Vec<C64> {
        self.basis.iter().zip(&self.spokes[k]).map(|(d, &h)| h * character(d.v, s)).collect()
    }

    /// Non-normalized periods of an edge chain on the lifted star graph.
    pub fn chain_integral(&self, chain: &[i64]) -> Vec<C64> {
        chain_integral(&self.homology, &self.basis, &self.spokes, chain)
    }

    /// Normalized row vector `w A^{-1}` of a non-normalized vector `w`.
    pub fn normalize(&self, w: &[C64]) -> DVector<C64> {
        let v = DVector::from_row_slice(w);
        self.a_inv.transpose() * v
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mat = |m: &DMatrix<C64>| -> Vec<Vec<[f64; 2]>> {
            (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect()).collect()
        };
        json!({
            "genus": self.genus(),
            "base_point": [self.x0().re, self.x0().im],
            "basis": self.basis.iter().map(|d| json!({"v": d.v, "l": d.l})).collect::<Vec<_>>(),
            "A": mat(&self.a),
            "B": mat(&self.b),
            "tau": mat(&self.tau),
            "detC": [self.det_c.re, self.det_c.im],
            "diagnostics": self.diagnostics,
            "homology_fingerprint": self.homology.fingerprint,
        })
    }
}

fn chain_integral(h: &HomologyBasis, basis: &[DifferentialIndex], spokes: &[Vec<C64>], chain: &[i64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); basis.len()];
    for (e, &c) in chain.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let (k, s) = h.graph.edge_data(e);
        for (i, d) in basis.iter().enumerate() {
            out[i] += spokes[k][i] * (character(d.v, Sheet(s as u32)) * c as f64);
        }
    }
    out
}

/// Values of all basis differentials (dx-coefficients times `dx/ds`) along
/// the spoke to `lambda_k` with `x = x0 + (1 - s^2)(lambda_k - x0)`. The
/// vanishing factor `s` of `y_{j(k)}` is cancelled analytically.
pub fn spoke_integrand(curve: &FiberProductCurve, basis: &[DifferentialIndex], x0: C64, y0: &[C64], k: usize, s: f64) -> Vec<C64> {
    let lam = curve.lambda(k);
    let bk = curve.branch_id(k);
    let t = 1.0 - s * s;
    let dx = lam - x0;
    let x = x0 + dx * t;
    let mut yr = Vec::with_capacity(curve.n());
    for (j, f) in curve.factors().iter().enumerate() {
        let mut prod = y0[j];
        for (i, &l) in f.branch_points.iter().enumerate() {
            if j == bk.factor && i == bk.index {
                continue;
            }
            prod *= (C64::new(1.0, 0.0) + dx * t / (x0 - l)).sqrt();
        }
        yr.push(prod);
    }
    basis
        .iter()
        .map(|d| {
            let mut denom = C64::new(1.0, 0.0);
            for (j, &y) in yr.iter().enumerate() {
                if d.uses_factor(j) {
                    denom *= y;
                }
            }
            let w = if d.uses_factor(bk.factor) { 2.0 } else { 2.0 * s };
            dx * x.powu(d.l as u32) * w / denom
        })
        .collect()
}

pub fn spoke_integrals(
    curve: &FiberProductCurve,
    basis: &[DifferentialIndex],
    x0: C64,
    opts: &PeriodOptions,
) -> Result<(Vec<Vec<C64>>, f64)> {
    let y0 = curve.principal_point(x0).y;
    let q = QuadratureOptions { rel_tol: opts.rel_tol, ..Default::default() };
    let results: Vec<Result<(Vec<C64>, f64)>> = (0..curve.branch_count())
        .into_par_iter()
        .map(|k| {
            let r = integrate(|s| spoke_integrand(curve, basis, x0, &y0, k, s), 0.0, 1.0, basis.len(), &q)?;
            Ok((r.value, r.error))
        })
        .collect();
    let mut spokes = Vec::with_capacity(results.len());
    let mut err = 0.0f64;
    for r in results {
        let (v, e) = r?;
        spokes.push(v);
        err = err.max(e);
    }
    Ok((spokes, err))
}

pub fn symmetric_min_eig(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn period_matrices(curve: &FiberProductCurve, homology: HomologyBasis, opts: &PeriodOptions) -> Result<PeriodData> {
    let basis = curve.differential_basis();
    let g = basis.len();
    let x0 = homology.graph.x0;
    let (spokes, qerr) = spoke_integrals(curve, &basis, x0, opts)?;
    let mut a = DMatrix::zeros(g, g);
    let mut b = DMatrix::zeros(g, g);
    for i in 0..g {
        let ra = chain_integral(&homology, &basis, &spokes, &homology.a_cycles[i]);
        let rb = chain_integral(&homology, &basis, &spokes, &homology.b_cycles[i]);
        for d in 0..g {
            a[(i, d)] = ra[d];
            b[(i, d)] = rb[d];
        }
    }
    let sv = a.clone().singular_values();
    let condition = if g == 0 { 1.0 } else { sv.max() / sv.min() };
    if !(condition <= opts.max_condition) {
        return Err(Error::IllConditioned { condition });
    }
    let a_inv = a.clone().try_inverse().ok_or(Error::IllConditioned { condition: f64::INFINITY })?;
    let tau = &b * &a_inv;
    let symmetry_residual = (0..g)
        .flat_map(|r| (0..g).map(move |c| (r, c)))
        .map(|(r, c)| (tau[(r, c)] - tau[(c, r)]).norm())
        .fold(0.0, f64::max);
    let min_eig = if g == 0 { f64::INFINITY } else { symmetric_min_eig(&tau.map(|z| z.im)) };
    let det_c = if g == 0 { C64::new(1.0, 0.0) } else { a.determinant() };
    Ok(PeriodData {
        basis,
        homology,
        spokes,
        a,
        b,
        tau,
        a_inv,
        det_c,
        diagnostics: PeriodDiagnostics { symmetry_residual, min_eig_im_tau: min_eig, condition, quadrature_error: qerr },
    })
}

/// Full pipeline at a given base point: monodromy, canonical homology, periods.
pub fn compute_periods(curve: &FiberProductCurve, x0: C64, opts: &PeriodOptions) -> Result<PeriodData> {
    let mono = monodromy(curve, x0)?;
    let h = homology_basis(curve, &mono)?;
    period_matrices(curve, h, opts)
}

pub fn compute_periods_default(curve: &FiberProductCurve) -> Result<PeriodData> {
    compute_periods(curve, choose_base_point(curve), &PeriodOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real_curve(n: usize, rows: &[&[f64]]) -> FiberProductCurve {
        let m = rows[0].len() / 2;
        FiberProductCurve::validate(n, m, rows.iter().map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect()).collect())
            .unwrap()
    }

    #[test]
    fn riemann_relations_small_instances() {
        for x in [
            real_curve(1, &[&[-1.0 / 3.0, -1.0, 1.0, 1.0 / 3.0]]),
            real_curve(1, &[&[-2.0, -1.0, -0.5, 0.5, 1.2, 2.5]]),
            real_curve(2, &[&[-2.0, -1.0, 1.0, 2.0], &[-3.0, -1.5, 1.5, 3.0]]),
        ] {
            let p = compute_periods_default(&x).unwrap();
            assert!(p.diagnostics.symmetry_residual < 1e-8, "{:?}", p.diagnostics);
            assert!(p.diagnostics.min_eig_im_tau > 0.0, "{:?}", p.diagnostics);
        }
    }

    #[test]
    fn spoke_integral_matches_direct_quadrature() {
        // compare one spoke against a t-parametrized integral stopped short of
        // the endpoint plus the local sqrt term
        let x = real_curve(1, &[&[-2.0, -1.0, 1.0, 2.0]]);
        let basis = x.differential_basis();
        let x0 = C64::new(0.0, 1.0);
        let (spokes, _) = spoke_integrals(&x, &basis, x0, &PeriodOptions::default()).unwrap();
        let k = 2;
        let lam = x.lambda(k);
        let y0 = x.principal_point(x0).y;
        let eps = 1e-8;
        let r = integrate(
            |t| {
                let y = crate::surface::continuation::continue_on_segment(&x, x0, &y0, lam, t);
                vec![(lam - x0) / y[0]]
            },
            0.0,
            1.0 - eps,
            1,
            &QuadratureOptions { rel_tol: 1e-11, ..Default::default() },
        )
        .unwrap();
        // the omitted tail is 2 sqrt(eps) (lam - x0)^{1/2} / sqrt(f'(lam)) to leading order
        let tail_len = (lam - x0) * eps;
        let fp = x.factors()[0].derivative_at_root(k);
        let tail = 2.0 * (tail_len / fp).sqrt().norm();
        assert!((r.value[0] - spokes[k][0]).norm() < 1.01 * tail, "{} {}", r.value[0], spokes[k][0]);
    }
}
