//! Exact combinatorics of the branch-point labellings `beta`.

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::curve::{BranchId, FiberProductCurve};
use crate::error::{Error, Result};

/// `{0,1}` labels on the branch points, row `j` for factor `j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BetaVector {
    pub entries: Vec<Vec<u8>>,
}

impl BetaVector {
    pub fn new(entries: Vec<Vec<u8>>) -> Self {
        BetaVector { entries }
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        BetaVector { entries: vec![vec![0; 2 * m]; n] }
    }

    /// Decodes bit `j * 2m + i` of `bits` as entry `(j, i)`.
    pub fn from_bits(n: usize, m: usize, bits: u64) -> Self {
        let entries = (0..n)
            .map(|j| (0..2 * m).map(|i| (bits >> (j * 2 * m + i) & 1) as u8).collect())
            .collect();
        BetaVector { entries }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.entries.len(), self.entries.first().map_or(0, Vec::len))
    }

    pub fn get(&self, b: BranchId) -> u8 {
        self.entries[b.factor][b.index]
    }

    /// Flattened in global branch order.
    pub fn flat(&self) -> Vec<u8> {
        self.entries.iter().flatten().copied().collect()
    }

    pub fn complement(&self) -> BetaVector {
        BetaVector { entries: self.entries.iter().map(|r| r.iter().map(|&b| 1 - b).collect()).collect() }
    }

    pub fn row_sums(&self) -> Vec<usize> {
        self.entries.iter().map(|r| r.iter().map(|&b| b as usize).sum()).collect()
    }

    pub fn total(&self) -> usize {
        self.row_sums().iter().sum()
    }

    pub fn check_shape(&self, curve: &FiberProductCurve) -> Result<()> {
        let expected = (curve.n(), 2 * curve.m());
        let ragged = self.entries.iter().any(|r| r.len() != expected.1);
        if self.shape() != expected || ragged || self.entries.iter().flatten().any(|&b| b > 1) {
            return Err(Error::ShapeMismatch { expected, got: self.shape() });
        }
        Ok(())
    }
}

/// `tau[v]` for `v` in `0 .. 2^n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TauProfile {
    pub tau: Vec<i64>,
}

impl TauProfile {
    pub fn sum(&self) -> i64 {
        self.tau.iter().sum()
    }
}

pub fn tau_profile(curve: &FiberProductCurve, beta: &BetaVector) -> Result<TauProfile> {
    beta.check_shape(curve)?;
    let mn = (curve.m() * curve.n()) as i64;
    let tau = (0u32..1 << curve.n())
        .map(|v| {
            let odd: i64 = beta
                .entries
                .iter()
                .enumerate()
                .map(|(j, row)| {
                    let vj = (v >> j & 1) as u8;
                    row.iter().filter(|&&b| (b + vj) % 2 == 1).count() as i64
                })
                .sum();
            mn - odd
        })
        .collect();
    Ok(TauProfile { tau })
}

pub fn r_minus_d(curve: &FiberProductCurve, beta: &BetaVector) -> Result<i64> {
    Ok(tau_profile(curve, beta)?.tau.iter().map(|&t| t.max(0)).sum())
}

pub fn is_admissible(curve: &FiberProductCurve, beta: &BetaVector) -> Result<bool> {
    Ok(tau_profile(curve, beta)?.tau.iter().all(|&t| t == 0))
}

/// `deg D = 2^{n-1} sum(beta) - 2^n` for `D = sum beta_k phi^{-1}(lambda_k) - sum infinity`.
pub fn divisor_degree(curve: &FiberProductCurve, beta: &BetaVector) -> i64 {
    let half = 1i64 << (curve.n() - 1);
    half * beta.total() as i64 - 2 * half
}

/// Admissible labellings (exactly `m` ones per row) in lexicographic order of
/// the flattened vector.
pub struct AdmissibleIter {
    m: usize,
    rows: Vec<Vec<u8>>,
    done: bool,
}

pub fn enumerate_admissible(curve: &FiberProductCurve) -> AdmissibleIter {
    let m = curve.m();
    let first: Vec<u8> = (0..2 * m).map(|i| u8::from(i >= m)).collect();
    AdmissibleIter { m, rows: vec![first; curve.n()], done: false }
}

fn next_permutation(row: &mut [u8]) -> bool {
    let n = row.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && row[i - 1] >= row[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while row[j] <= row[i - 1] {
        j -= 1;
    }
    row.swap(i - 1, j);
    row[i..].reverse();
    true
}

impl Iterator for AdmissibleIter {
    type Item = BetaVector;

    fn next(&mut self) -> Option<BetaVector> {
        if self.done {
            return None;
        }
        let out = BetaVector { entries: self.rows.clone() };
        let mut j = self.rows.len();
        loop {
            if j == 0 {
                self.done = true;
                break;
            }
            j -= 1;
            if next_permutation(&mut self.rows[j]) {
                break;
            }
            self.rows[j] = (0..2 * self.m).map(|i| u8::from(i >= self.m)).collect();
        }
        Some(out)
    }
}

fn sign_factor(b: u8, vj: u8) -> Rational64 {
    // {(b + v)/2} - 1/4
    if (b + vj) % 2 == 1 {
        Rational64::new(1, 4)
    } else {
        Rational64::new(-1, 4)
    }
}

/// `q = sum_v ({(b1 + v_j1)/2} - 1/4) ({(b2 + v_j2)/2} - 1/4)`.
pub fn q_exponent(curve: &FiberProductCurve, beta: &BetaVector, p1: BranchId, p2: BranchId) -> Result<Rational64> {
    beta.check_shape(curve)?;
    if p1 == p2 {
        return Err(Error::SamePoint(curve.branch_index(p1)));
    }
    Ok(q_form(curve, beta, p1, p2))
}

/// The same parity sum as [`q_exponent`] but defined on the diagonal too,
/// where it equals `2^n / 16`.
pub fn q_form(curve: &FiberProductCurve, beta: &BetaVector, p1: BranchId, p2: BranchId) -> Rational64 {
    let b1 = beta.get(p1);
    let b2 = beta.get(p2);
    let mut q = Rational64::from_integer(0);
    for v in 0u32..1 << curve.n() {
        let v1 = (v >> p1.factor & 1) as u8;
        let v2 = (v >> p2.factor & 1) as u8;
        q += sign_factor(b1, v1) * sign_factor(b2, v2);
    }
    q
}

pub fn gamma_exponent(curve: &FiberProductCurve, p1: BranchId, p2: BranchId) -> Result<Rational64> {
    if p1 == p2 {
        return Err(Error::SamePoint(curve.branch_index(p1)));
    }
    Ok(if p1.factor == p2.factor { Rational64::new(1, 8) } else { Rational64::new(1, 16) })
}

/// Symmetric pair tables indexed by global branch index; diagonal entries are
/// zero and never used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentTable {
    pub q: Vec<Vec<Rational64>>,
    pub gamma: Vec<Vec<Rational64>>,
}

impl ExponentTable {
    pub fn new(curve: &FiberProductCurve, beta: &BetaVector) -> Result<Self> {
        beta.check_shape(curve)?;
        let n = curve.branch_count();
        let zero = Rational64::from_integer(0);
        let mut q = vec![vec![zero; n]; n];
        let mut gamma = vec![vec![zero; n]; n];
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    let (pa, pb) = (curve.branch_id(a), curve.branch_id(b));
                    q[a][b] = q_exponent(curve, beta, pa, pb)?;
                    gamma[a][b] = gamma_exponent(curve, pa, pb)?;
                }
            }
        }
        Ok(ExponentTable { q, gamma })
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }
}

pub fn rational_to_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::C64;

    fn line_curve(n: usize, m: usize) -> FiberProductCurve {
        let rows = (0..n)
            .map(|j| (0..2 * m).map(|i| C64::new((j * 2 * m + i) as f64 + 1.0, 0.3 * j as f64)).collect())
            .collect();
        FiberProductCurve::validate(n, m, rows).unwrap()
    }

    fn binom(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn tau_examples() {
        let x = line_curve(1, 3);
        let t = tau_profile(&x, &BetaVector::new(vec![vec![1, 1, 1, 0, 0, 0]])).unwrap();
        assert_eq!(t.tau, vec![0, 0]);
        let t = tau_profile(&x, &BetaVector::new(vec![vec![1, 1, 1, 1, 0, 0]])).unwrap();
        assert_eq!(t.tau, vec![-1, 1]);
        assert_eq!(r_minus_d(&x, &BetaVector::new(vec![vec![1, 1, 1, 1, 0, 0]])).unwrap(), 1);
        assert_eq!(r_minus_d(&x, &BetaVector::new(vec![vec![1; 6]])).unwrap(), 3);
        let t = tau_profile(&x, &BetaVector::zeros(1, 3)).unwrap();
        assert_eq!(t.tau[0], 3);
        assert!(tau_profile(&x, &BetaVector::zeros(2, 3)).is_err());
    }

    #[test]
    fn admissibility_examples() {
        let x = line_curve(2, 2);
        assert!(is_admissible(&x, &BetaVector::new(vec![vec![1, 1, 0, 0], vec![0, 1, 0, 1]])).unwrap());
        assert!(!is_admissible(&x, &BetaVector::new(vec![vec![1, 1, 1, 0], vec![0, 1, 0, 0]])).unwrap());
        assert!(!is_admissible(&x, &BetaVector::zeros(2, 2)).unwrap());
    }

    #[test]
    fn exhaustive_small_cases() {
        for n in 1..=3usize {
            for m in 1..=3usize {
                let x = line_curve(n, m);
                let bits = n * 2 * m;
                let mut admissible = 0;
                for code in 0u64..1 << bits {
                    let beta = BetaVector::from_bits(n, m, code);
                    let t = tau_profile(&x, &beta).unwrap();
                    assert_eq!(t.sum(), 0);
                    let adm = is_admissible(&x, &beta).unwrap();
                    assert_eq!(r_minus_d(&x, &beta).unwrap() == 0, adm);
                    assert_eq!(adm, beta.row_sums().iter().all(|&s| s == m));
                    if adm {
                        admissible += 1;
                        assert_eq!(divisor_degree(&x, &beta), x.genus() as i64 - 1);
                    }
                    if n == 1 {
                        assert_eq!(r_minus_d(&x, &beta).unwrap(), r_minus_d(&x, &beta.complement()).unwrap());
                    }
                }
                assert_eq!(admissible, binom(2 * m, m).pow(n as u32));
                let listed: Vec<_> = enumerate_admissible(&x).collect();
                assert_eq!(listed.len(), admissible);
                assert!(listed.windows(2).all(|w| w[0].flat() < w[1].flat()));
                assert!(listed.iter().all(|b| is_admissible(&x, b).unwrap()));
            }
        }
    }

    #[test]
    fn complement_permutes_tau() {
        for n in 1..=3usize {
            let x = line_curve(n, 2);
            let all = (1u32 << n) - 1;
            for code in 0u64..1 << (4 * n) {
                let beta = BetaVector::from_bits(n, 2, code);
                let t = tau_profile(&x, &beta).unwrap();
                let tc = tau_profile(&x, &beta.complement()).unwrap();
                for v in 0..1u32 << n {
                    assert_eq!(t.tau[v as usize], tc.tau[(v ^ all) as usize]);
                }
            }
        }
    }

    #[test]
    fn enumeration_counts_and_early_stop() {
        assert_eq!(enumerate_admissible(&line_curve(1, 3)).count(), 20);
        assert_eq!(enumerate_admissible(&line_curve(2, 2)).count(), 36);
        assert_eq!(enumerate_admissible(&line_curve(1, 1)).count(), 2);
        assert_eq!(enumerate_admissible(&line_curve(2, 2)).take(3).count(), 3);
        let first = enumerate_admissible(&line_curve(1, 2)).next().unwrap();
        assert_eq!(first.entries, vec![vec![0, 0, 1, 1]]);
    }

    #[test]
    fn q_examples_and_closed_form() {
        let x1 = line_curve(1, 2);
        let beta = BetaVector::new(vec![vec![1, 1, 0, 0]]);
        let p = |k| x1.branch_id(k);
        assert_eq!(q_exponent(&x1, &beta, p(0), p(1)).unwrap(), Rational64::new(1, 8));
        assert_eq!(q_exponent(&x1, &beta, p(0), p(2)).unwrap(), Rational64::new(-1, 8));
        assert!(matches!(q_exponent(&x1, &beta, p(0), p(0)), Err(Error::SamePoint(0))));
        for n in 2..=3usize {
            let x = line_curve(n, 2);
            let scale = Rational64::new(1 << n, 16);
            for beta in enumerate_admissible(&x) {
                let t = ExponentTable::new(&x, &beta).unwrap();
                for a in 0..t.len() {
                    for b in 0..t.len() {
                        if a == b {
                            continue;
                        }
                        assert_eq!(t.q[a][b], t.q[b][a]);
                        let (pa, pb) = (x.branch_id(a), x.branch_id(b));
                        let expect = if pa.factor != pb.factor {
                            Rational64::from_integer(0)
                        } else if beta.get(pa) == beta.get(pb) {
                            scale
                        } else {
                            -scale
                        };
                        assert_eq!(t.q[a][b], expect);
                    }
                }
            }
        }
        let x2 = line_curve(2, 2);
        let beta = enumerate_admissible(&x2).next().unwrap();
        let same = (0..4).find(|&k| k != 2 && beta.entries[0][k] == beta.entries[0][2]).unwrap();
        assert_eq!(q_exponent(&x2, &beta, x2.branch_id(2), x2.branch_id(same)).unwrap(), Rational64::new(1, 4));
    }

    #[test]
    fn gamma_values() {
        let x = line_curve(2, 2);
        assert_eq!(gamma_exponent(&x, x.branch_id(0), x.branch_id(1)).unwrap(), Rational64::new(1, 8));
        assert_eq!(gamma_exponent(&x, x.branch_id(0), x.branch_id(5)).unwrap(), Rational64::new(1, 16));
        assert!(gamma_exponent(&x, x.branch_id(3), x.branch_id(3)).is_err());
    }

    #[test]
    fn exponent_balance_at_infinity() {
        // per v, the f_{beta,v} exponents sum to zero for admissible beta
        for (n, m) in [(1, 2), (1, 3), (2, 2)] {
            let x = line_curve(n, m);
            for beta in enumerate_admissible(&x) {
                for v in 0u32..1 << n {
                    let s: Rational64 = (0..x.branch_count())
                        .map(|k| {
                            let b = x.branch_id(k);
                            sign_factor(beta.get(b), (v >> b.factor & 1) as u8)
                        })
                        .sum();
                    assert_eq!(s, Rational64::from_integer(0));
                }
            }
        }
    }
}
