use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::curve::{FiberProductCurve, C64};
use crate::divisor::{gamma_exponent, q_exponent, rational_to_f64, BetaVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairExponent {
    pub a: usize,
    pub b: usize,
    pub exponent: Rational64,
}

/// Exponents of the branch-point differences `(lambda_a - lambda_b)`, one per
/// unordered pair `a < b`, and the weight of `log det C`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThomaeExponents {
    pub pairs: Vec<PairExponent>,
    pub det_c_weight: Rational64,
}

impl ThomaeExponents {
    /// `q + gamma / 2` for every pair.
    pub fn from_formula(curve: &FiberProductCurve, beta: &BetaVector) -> Result<Self> {
        let mut pairs = Vec::new();
        for a in 0..curve.branch_count() {
            for b in a + 1..curve.branch_count() {
                let (pa, pb) = (curve.branch_id(a), curve.branch_id(b));
                let e = q_exponent(curve, beta, pa, pb)? + gamma_exponent(curve, pa, pb)? / 2;
                pairs.push(PairExponent { a, b, exponent: e });
            }
        }
        Ok(ThomaeExponents { pairs, det_c_weight: Rational64::new(1, 2) })
    }

    /// The classical hyperelliptic pattern: `1/4` for pairs with equal labels
    /// and `0` otherwise. Only defined for a single factor.
    pub fn classical(curve: &FiberProductCurve, beta: &BetaVector) -> Result<Self> {
        beta.check_shape(curve)?;
        if curve.n() != 1 {
            return Err(Error::Hypothesis("the classical exponent pattern needs a single factor".into()));
        }
        let flat = beta.flat();
        let mut pairs = Vec::new();
        for a in 0..flat.len() {
            for b in a + 1..flat.len() {
                let e = if flat[a] == flat[b] { Rational64::new(1, 4) } else { Rational64::from_integer(0) };
                pairs.push(PairExponent { a, b, exponent: e });
            }
        }
        Ok(ThomaeExponents { pairs, det_c_weight: Rational64::new(1, 2) })
    }

    /// `sum_{j != i} e_ij / (lambda_i - lambda_j)`.
    pub fn pole_sum(&self, lambdas: &[C64], i: usize) -> C64 {
        self.pairs
            .iter()
            .filter(|p| p.a == i || p.b == i)
            .map(|p| {
                let j = if p.a == i { p.b } else { p.a };
                rational_to_f64(p.exponent) / (lambdas[i] - lambdas[j])
            })
            .sum()
    }

    /// Distinct exponent values, sorted.
    pub fn distinct(&self) -> Vec<Rational64> {
        let mut v: Vec<Rational64> = self.pairs.iter().map(|p| p.exponent).collect();
        v.sort();
        v.dedup();
        v
    }

    pub fn denominators_divide(&self, d: i64) -> bool {
        self.pairs.iter().all(|p| d % p.exponent.denom() == 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divisor::enumerate_admissible;

    fn real_curve(n: usize, rows: &[&[f64]]) -> FiberProductCurve {
        let m = rows[0].len() / 2;
        FiberProductCurve::validate(n, m, rows.iter().map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect()).collect())
            .unwrap()
    }

    #[test]
    fn single_factor_pattern() {
        let x = real_curve(1, &[&[-2.0, -1.0, -0.5, 0.5, 1.2, 2.5]]);
        for beta in enumerate_admissible(&x) {
            let t = ThomaeExponents::from_formula(&x, &beta).unwrap();
            assert_eq!(t.distinct(), vec![Rational64::new(-1, 16), Rational64::new(3, 16)]);
            let flat = beta.flat();
            for p in &t.pairs {
                let same = flat[p.a] == flat[p.b];
                assert_eq!(p.exponent, if same { Rational64::new(3, 16) } else { Rational64::new(-1, 16) });
            }
        }
    }

    #[test]
    fn denominators_divide_32() {
        let x = real_curve(2, &[&[-2.0, -1.0, 1.0, 2.0], &[-3.0, -1.5, 1.5, 3.0]]);
        for beta in enumerate_admissible(&x) {
            assert!(ThomaeExponents::from_formula(&x, &beta).unwrap().denominators_divide(32));
        }
    }
}
