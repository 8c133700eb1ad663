use std::time::Instant;

use super::checks::{run_check, Outcome, CHECK_NAMES};
use super::config::Config;
use super::report::{CheckReport, Provenance, Status};
use super::session::{RunOptions, Session};
use crate::constants::CALIBRATION_VERSION;
use crate::error::{Error, Result};

/// Resolves a selector (`"suite"`, `"all"`, or a check name) against the
/// config's `checks` list.
pub fn resolve_checks(selector: &str, config: &Config) -> Result<Vec<String>> {
    let names: Vec<String> = match selector {
        "suite" | "all" if !config.checks.is_empty() => config.checks.clone(),
        "suite" | "all" => CHECK_NAMES.iter().map(|s| s.to_string()).collect(),
        name => vec![name.to_string()],
    };
    for n in &names {
        if !CHECK_NAMES.contains(&n.as_str()) {
            return Err(Error::Config(format!("unknown check {n:?}; known: {}", CHECK_NAMES.join(", "))));
        }
    }
    Ok(names)
}

fn report_from(name: &str, s: &Session, result: Result<Outcome>, secs: f64) -> CheckReport {
    let provenance = Provenance {
        config_hash: s.config.hash(),
        seed: s.seed,
        homology_fingerprint: Some(s.base.fingerprint().to_string()),
        calibration_version: CALIBRATION_VERSION.to_string(),
    };
    let (status, residuals, reason, notes, data) = match result {
        Ok(o) => (CheckReport::status_from(&o.residuals), o.residuals, None, o.notes, o.data),
        Err(e @ (Error::Hypothesis(_) | Error::NearVanishing { .. })) => {
            (Status::Skipped, vec![], Some(format!("skipped: {e}")), vec![], serde_json::Value::Null)
        }
        Err(e) => (Status::Error, vec![], Some(e.to_string()), vec![], serde_json::Value::Null),
    };
    CheckReport {
        check: name.to_string(),
        instance: s.instance(),
        status,
        residuals,
        reason,
        notes,
        data,
        wall_time_s: secs,
        provenance,
    }
}

pub fn run_named(names: &[String], session: &Session) -> Vec<CheckReport> {
    names
        .iter()
        .map(|n| {
            let t = Instant::now();
            let r = run_check(n, session);
            report_from(n, session, r, t.elapsed().as_secs_f64())
        })
        .collect()
}

/// Builds the session and runs the selected checks in order. Errors here are
/// input errors or failures of the shared setup (periods, Riemann constant).
pub fn run_suite(config: &Config, selector: &str, run: RunOptions) -> Result<Vec<CheckReport>> {
    let names = resolve_checks(selector, config)?;
    let session = Session::new(config.clone(), run)?;
    Ok(run_named(&names, &session))
}
