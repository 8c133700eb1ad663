use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::curve::{FiberProductCurve, C64};
use crate::divisor::BetaVector;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorSpec {
    pub lambda: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative tolerance of the period quadrature.
    pub integration: f64,
    /// Absolute truncation error of theta sums.
    pub theta: f64,
    /// Finite-difference step in branch-point space.
    pub fd_step: f64,
    /// Pass threshold for the derivative-based checks.
    pub check: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { integration: 1e-12, theta: 1e-14, fd_step: 1e-5, check: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub n: usize,
    pub m: usize,
    pub factors: Vec<FactorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<Vec<u8>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_point: Option<[f64; 2]>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub checks: Vec<String>,
}

impl Config {
    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        Config {
            n: rows.len(),
            m: rows.first().map_or(0, |r| r.len() / 2),
            factors: rows.iter().map(|r| FactorSpec { lambda: r.iter().map(|&x| [x, 0.0]).collect() }).collect(),
            beta: None,
            base_point: None,
            tolerances: Tolerances::default(),
            seed: 0,
            checks: Vec::new(),
        }
    }

    /// The three documented test instances: `"1x2"`, `"1x3"` and `"2x2"`.
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "1x2" => Some(Self::from_real_rows(&[&[-1.0 / 3.0, -1.0, 1.0, 1.0 / 3.0]])),
            "1x3" => Some(Self::from_real_rows(&[&[-2.0, -1.0, -0.5, 0.5, 1.2, 2.5]])),
            "2x2" => Some(Self::from_real_rows(&[&[-2.0, -1.0, 1.0, 2.0], &[-3.0, -1.5, 1.5, 3.0]])),
            _ => None,
        }
    }

    pub fn curve(&self) -> Result<FiberProductCurve> {
        let rows = self.factors.iter().map(|f| f.lambda.iter().map(|&[re, im]| C64::new(re, im)).collect()).collect();
        FiberProductCurve::validate(self.n, self.m, rows)
    }

    pub fn beta(&self, curve: &FiberProductCurve) -> Result<Option<BetaVector>> {
        let Some(rows) = &self.beta else { return Ok(None) };
        if rows.iter().flatten().any(|&b| b > 1) {
            return Err(Error::Config("beta entries must be 0 or 1".into()));
        }
        let beta = BetaVector::new(rows.clone());
        beta.check_shape(curve)?;
        Ok(Some(beta))
    }

    pub fn base_point(&self) -> Option<C64> {
        self.base_point.map(|[re, im]| C64::new(re, im))
    }

    pub fn validate_tolerances(&self) -> Result<()> {
        let t = &self.tolerances;
        for (name, v) in [("integration", t.integration), ("theta", t.theta), ("fd_step", t.fd_step), ("check", t.check)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("tolerance {name} must be positive and finite")));
            }
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).unwrap_or_default();
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_defaults() {
        let c = Config::from_json_str(r#"{"n":1,"m":2,"factors":[{"lambda":[[-1,0],[1,0],[-2,0],[2,0]]}]}"#).unwrap();
        assert_eq!(c.tolerances, Tolerances::default());
        assert_eq!(c.curve().unwrap().genus(), 1);
        let back = Config::from_json_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back.hash(), c.hash());
        assert!(Config::from_json_str(r#"{"n":1}"#).is_err());
        assert!(Config::from_json_str(r#"{"n":1,"m":1,"factors":[],"bogus":1}"#).is_err());
    }

    #[test]
    fn beta_validation() {
        let mut c = Config::preset("1x2").unwrap();
        let curve = c.curve().unwrap();
        c.beta = Some(vec![vec![1, 1, 0]]);
        assert!(matches!(c.beta(&curve), Err(Error::ShapeMismatch { .. })));
        c.beta = Some(vec![vec![1, 2, 0, 0]]);
        assert!(matches!(c.beta(&curve), Err(Error::Config(_))));
    }
}
