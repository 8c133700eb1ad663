//! The fiber product `X = {(x, y_1, .., y_n) : y_j^2 = f_j(x)}` of `n`
//! hyperelliptic curves, each branched over `2m` finite points.
//!
//! Branch points carry a global index `k = j * 2m + i` (factor `j`, position
//! `i`, both zero-based). Sheets over a regular point are labelled by
//! [`Sheet`] bit vectors in `Z_2^n`: bit `j` set means `y_j` carries the
//! opposite sign to the reference continuation.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Largest admissible branch point modulus.
pub const MAX_BRANCH_MODULUS: f64 = 1e8;

/// Relative tolerance for `|y_j^2 - f_j(x)| <= tol * (1 + |f_j(x)|)`.
pub const MEMBERSHIP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CurveViolation {
    BadShape { factor: Option<usize>, expected: usize, got: usize },
    DuplicateBranchPoint { first: usize, second: usize },
    NonFinite { branch: usize },
    TooLarge { branch: usize, modulus: f64 },
    ZeroParameter { name: &'static str },
}

impl fmt::Display for CurveViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CurveViolation::BadShape { factor: Some(j), expected, got } => {
                write!(f, "BadShape: factor {j} has {got} branch points, expected {expected}")
            }
            CurveViolation::BadShape { factor: None, expected, got } => {
                write!(f, "BadShape: {got} factors given, expected {expected}")
            }
            CurveViolation::DuplicateBranchPoint { first, second } => {
                write!(f, "DuplicateBranchPoint: branch points {first} and {second} coincide")
            }
            CurveViolation::NonFinite { branch } => write!(f, "branch point {branch} is not finite"),
            CurveViolation::TooLarge { branch, modulus } => {
                write!(f, "branch point {branch} has modulus {modulus:.3e} above {MAX_BRANCH_MODULUS:.0e}")
            }
            CurveViolation::ZeroParameter { name } => write!(f, "BadShape: {name} must be at least 1"),
        }
    }
}

/// `y^2 = prod_i (x - lambda_i)` with an even number of branch points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperellipticFactor {
    pub index: usize,
    pub branch_points: Vec<C64>,
}

impl HyperellipticFactor {
    pub fn eval(&self, x: C64) -> C64 {
        self.branch_points.iter().fold(C64::new(1.0, 0.0), |acc, &l| acc * (x - l))
    }

    /// `f'(x) / f(x)`.
    pub fn log_derivative(&self, x: C64) -> C64 {
        self.branch_points.iter().map(|&l| (x - l).inv()).sum()
    }

    /// `prod_{i' != i} (lambda_i - lambda_i')`, i.e. `f'(lambda_i)`.
    pub fn derivative_at_root(&self, i: usize) -> C64 {
        let li = self.branch_points[i];
        self.branch_points
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != i)
            .fold(C64::new(1.0, 0.0), |acc, (_, &l)| acc * (li - l))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BranchId {
    pub factor: usize,
    pub index: usize,
}

/// Element of `Z_2^n` used both as a sheet label and as a deck transformation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
pub struct Sheet(pub u32);

impl Sheet {
    pub fn flip(self, factor: usize) -> Sheet {
        Sheet(self.0 ^ (1 << factor))
    }

    pub fn has(self, factor: usize) -> bool {
        self.0 >> factor & 1 == 1
    }

    pub fn add(self, other: Sheet) -> Sheet {
        Sheet(self.0 ^ other.0)
    }
}

/// `(-1)^{<v, s>}`: the sign picked up by `1 / y_v` on sheet `s`.
pub fn character(v: u32, s: Sheet) -> f64 {
    if (v & s.0).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// The deck transformation negating `y_j` for every set bit `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AutomorphismElement {
    pub bits: u32,
}

impl AutomorphismElement {
    pub fn apply(&self, p: &SurfacePoint) -> SurfacePoint {
        let mut q = p.clone();
        for (j, y) in q.y.iter_mut().enumerate() {
            if self.bits >> j & 1 == 1 {
                *y = -*y;
            }
        }
        q
    }

    pub fn compose(&self, other: &AutomorphismElement) -> AutomorphismElement {
        AutomorphismElement { bits: self.bits ^ other.bits }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub x: C64,
    pub y: Vec<C64>,
    pub branch: Option<BranchId>,
}

impl SurfacePoint {
    pub fn is_branch(&self) -> bool {
        self.branch.is_some()
    }

    pub fn factor_of_branch(&self) -> Option<usize> {
        self.branch.map(|b| b.factor)
    }
}

/// `x^l dx / prod_{j in v} y_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DifferentialIndex {
    pub v: u32,
    pub l: usize,
}

impl DifferentialIndex {
    pub fn support_size(&self) -> usize {
        self.v.count_ones() as usize
    }

    pub fn uses_factor(&self, j: usize) -> bool {
        self.v >> j & 1 == 1
    }
}

impl fmt::Display for DifferentialIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(v={:b}, l={})", self.v, self.l)
    }
}

/// Leading dt-coefficient of a differential at a ramification point, with
/// `t = (x - lambda)^{1/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BranchCoefficient {
    Leading(C64),
    /// The differential does not involve the ramified `y_j`, so it vanishes
    /// to first order in `t`.
    ZeroLeadingOrder,
}

impl BranchCoefficient {
    pub fn value_or_zero(self) -> C64 {
        match self {
            BranchCoefficient::Leading(c) => c,
            BranchCoefficient::ZeroLeadingOrder => C64::new(0.0, 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberProductCurve {
    n: usize,
    m: usize,
    factors: Vec<HyperellipticFactor>,
}

impl FiberProductCurve {
    pub fn validate(n: usize, m: usize, branch_points: Vec<Vec<C64>>) -> Result<Self> {
        let mut violations = Vec::new();
        if n == 0 {
            violations.push(CurveViolation::ZeroParameter { name: "n" });
        }
        if m == 0 {
            violations.push(CurveViolation::ZeroParameter { name: "m" });
        }
        if n > 16 {
            violations.push(CurveViolation::BadShape { factor: None, expected: 16, got: n });
        }
        if branch_points.len() != n {
            violations.push(CurveViolation::BadShape {
                factor: None,
                expected: n,
                got: branch_points.len(),
            });
        }
        for (j, row) in branch_points.iter().enumerate() {
            if row.len() != 2 * m {
                violations.push(CurveViolation::BadShape {
                    factor: Some(j),
                    expected: 2 * m,
                    got: row.len(),
                });
            }
        }
        let flat: Vec<(usize, C64)> = branch_points
            .iter()
            .enumerate()
            .flat_map(|(j, row)| row.iter().enumerate().map(move |(i, &l)| (j * 2 * m + i, l)))
            .collect();
        for &(k, l) in &flat {
            if !l.re.is_finite() || !l.im.is_finite() {
                violations.push(CurveViolation::NonFinite { branch: k });
            } else if l.norm() > MAX_BRANCH_MODULUS {
                violations.push(CurveViolation::TooLarge { branch: k, modulus: l.norm() });
            }
        }
        for a in 0..flat.len() {
            for b in a + 1..flat.len() {
                if flat[a].1 == flat[b].1 {
                    violations.push(CurveViolation::DuplicateBranchPoint {
                        first: flat[a].0,
                        second: flat[b].0,
                    });
                }
            }
        }
        if !violations.is_empty() {
            return Err(Error::InvalidCurve(violations));
        }
        let factors = branch_points
            .into_iter()
            .enumerate()
            .map(|(index, branch_points)| HyperellipticFactor { index, branch_points })
            .collect();
        Ok(FiberProductCurve { n, m, factors })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn factors(&self) -> &[HyperellipticFactor] {
        &self.factors
    }

    pub fn genus(&self) -> usize {
        genus_formula(self.n, self.m)
    }

    pub fn sheet_count(&self) -> usize {
        1 << self.n
    }

    /// Total ramification `r = 2^n m n`.
    pub fn total_ramification(&self) -> usize {
        (1 << self.n) * self.m * self.n
    }

    pub fn branch_count(&self) -> usize {
        2 * self.m * self.n
    }

    pub fn branch_id(&self, k: usize) -> BranchId {
        BranchId { factor: k / (2 * self.m), index: k % (2 * self.m) }
    }

    pub fn branch_index(&self, b: BranchId) -> usize {
        b.factor * 2 * self.m + b.index
    }

    pub fn lambda(&self, k: usize) -> C64 {
        let b = self.branch_id(k);
        self.factors[b.factor].branch_points[b.index]
    }

    pub fn lambdas(&self) -> Vec<C64> {
        (0..self.branch_count()).map(|k| self.lambda(k)).collect()
    }

    pub fn min_branch_separation(&self) -> f64 {
        let l = self.lambdas();
        let mut best = f64::INFINITY;
        for a in 0..l.len() {
            for b in a + 1..l.len() {
                best = best.min((l[a] - l[b]).norm());
            }
        }
        best
    }

    /// Copy of the curve with branch point `k` moved to `value`.
    pub fn with_branch_point(&self, k: usize, value: C64) -> Result<Self> {
        let mut rows: Vec<Vec<C64>> = self.factors.iter().map(|f| f.branch_points.clone()).collect();
        let b = self.branch_id(k);
        rows[b.factor][b.index] = value;
        FiberProductCurve::validate(self.n, self.m, rows)
    }

    pub fn branch_rows(&self) -> Vec<Vec<C64>> {
        self.factors.iter().map(|f| f.branch_points.clone()).collect()
    }

    /// Nonzero `v` in binary-counter order, then `l = 0 ..= m|v| - 2`.
    pub fn differential_basis(&self) -> Vec<DifferentialIndex> {
        let mut out = Vec::with_capacity(self.genus());
        for v in 1u32..(1u32 << self.n) {
            let s = v.count_ones() as usize;
            if self.m * s >= 2 {
                for l in 0..=(self.m * s - 2) {
                    out.push(DifferentialIndex { v, l });
                }
            }
        }
        out
    }

    /// Point with every `y_j` the principal square root of `f_j(x)`.
    pub fn principal_point(&self, x: C64) -> SurfacePoint {
        let y = self.factors.iter().map(|f| f.eval(x).sqrt()).collect();
        SurfacePoint { x, y, branch: self.branch_at(x) }
    }

    pub fn point_with_signs(&self, x: C64, sheet: Sheet) -> SurfacePoint {
        let mut p = self.principal_point(x);
        for (j, y) in p.y.iter_mut().enumerate() {
            if sheet.has(j) {
                *y = -*y;
            }
        }
        p
    }

    fn branch_at(&self, x: C64) -> Option<BranchId> {
        (0..self.branch_count()).find(|&k| self.lambda(k) == x).map(|k| self.branch_id(k))
    }

    pub fn is_on_curve(&self, p: &SurfacePoint) -> bool {
        p.y.len() == self.n
            && self.factors.iter().zip(&p.y).all(|(f, &y)| {
                let fx = f.eval(p.x);
                (y * y - fx).norm() <= MEMBERSHIP_TOL * (1.0 + fx.norm())
            })
    }

    pub fn evaluate_differential(&self, d: DifferentialIndex, p: &SurfacePoint) -> Result<C64> {
        let mut denom = C64::new(1.0, 0.0);
        for j in 0..self.n {
            if d.uses_factor(j) {
                if p.y[j] == C64::new(0.0, 0.0) || p.branch.is_some_and(|b| b.factor == j) {
                    return Err(Error::BranchPointEvaluation { x: format!("{}", p.x) });
                }
                denom *= p.y[j];
            }
        }
        Ok(p.x.powu(d.l as u32) / denom)
    }

    /// Coefficient `c_0` in `(c_0 + c_1 t + ..) dt` at a ramification point
    /// over branch point `k`, with `t = (x - lambda_k)^{1/2}`. The point is
    /// selected by the remaining `y` values in `at`. Near the point
    /// `y_j = t * sqrt(g(x))` with `g = f_j / (x - lambda_k)`, the square
    /// root taken principal at `lambda_k`.
    pub fn branch_local_coefficient(
        &self,
        d: DifferentialIndex,
        k: usize,
        at: &SurfacePoint,
    ) -> BranchCoefficient {
        let b = self.branch_id(k);
        if !d.uses_factor(b.factor) {
            return BranchCoefficient::ZeroLeadingOrder;
        }
        let lam = self.lambda(k);
        let g = self.factors[b.factor].derivative_at_root(b.index).sqrt();
        let mut denom = g;
        for j in 0..self.n {
            if j != b.factor && d.uses_factor(j) {
                denom *= at.y[j];
            }
        }
        BranchCoefficient::Leading(lam.powu(d.l as u32) * 2.0 / denom)
    }

    /// Ramification point over `lambda_k` whose unramified `y` values are the
    /// principal roots with signs from `sheet` (bit `factor(k)` ignored).
    pub fn branch_point_on_sheet(&self, k: usize, sheet: Sheet) -> SurfacePoint {
        let b = self.branch_id(k);
        let lam = self.lambda(k);
        let y = self
            .factors
            .iter()
            .enumerate()
            .map(|(j, f)| {
                if j == b.factor {
                    C64::new(0.0, 0.0)
                } else {
                    let r = f.eval(lam).sqrt();
                    if sheet.has(j) {
                        -r
                    } else {
                        r
                    }
                }
            })
            .collect();
        SurfacePoint { x: lam, y, branch: Some(b) }
    }
}

pub fn genus_formula(n: usize, m: usize) -> usize {
    // (mn - 2) 2^{n-1} + 1, written to stay in unsigned arithmetic for mn = 1.
    let half = 1usize << (n - 1);
    (m * n * half + 1).saturating_sub(2 * half)
}
