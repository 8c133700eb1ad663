use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
}

impl Residual {
    pub fn new(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Residual { name: name.into(), value, tolerance }
    }

    pub fn passes(&self) -> bool {
        self.value <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub homology_fingerprint: Option<String>,
    pub calibration_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub instance: String,
    pub status: Status,
    pub residuals: Vec<Residual>,
    pub reason: Option<String>,
    pub notes: Vec<String>,
    pub data: serde_json::Value,
    pub wall_time_s: f64,
    pub provenance: Provenance,
}

impl CheckReport {
    /// Status implied by the residuals: pass iff every residual is within tolerance.
    pub fn status_from(residuals: &[Residual]) -> Status {
        if residuals.iter().all(Residual::passes) {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    /// Largest `value / tolerance`, or the raw value for zero tolerances.
    pub fn worst(&self) -> Option<&Residual> {
        self.residuals.iter().max_by(|a, b| ratio(a).total_cmp(&ratio(b)))
    }

    pub fn summary_line(&self) -> String {
        let tag = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIP",
            Status::Error => "ERROR",
        };
        let detail = match (&self.reason, self.worst()) {
            (Some(r), _) => r.clone(),
            (None, Some(w)) => format!("worst {} = {:.3e} (tol {:.1e})", w.name, w.value, w.tolerance),
            (None, None) => String::new(),
        };
        format!("{tag} {} [{}] {}", self.check, self.instance, detail)
    }

    /// JSON without the wall time, for reproducibility comparisons.
    pub fn stable_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).unwrap_or(serde_json::Value::Null);
        if let Some(obj) = v.as_object_mut() {
            obj.remove("wall_time_s");
        }
        v
    }
}

fn ratio(r: &Residual) -> f64 {
    if r.value.is_nan() {
        f64::INFINITY
    } else if r.tolerance > 0.0 {
        r.value / r.tolerance
    } else if r.value > r.tolerance {
        f64::MAX
    } else {
        0.0
    }
}

/// Aggregate exit status: 0 all passed or skipped, 1 some check failed,
/// 3 some check hit a numerical failure.
pub fn exit_code(reports: &[CheckReport]) -> i32 {
    if reports.iter().any(|r| r.status == Status::Error) {
        3
    } else if reports.iter().any(|r| r.status == Status::Fail) {
        1
    } else {
        0
    }
}
