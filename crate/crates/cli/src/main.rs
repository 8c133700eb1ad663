use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;
use thomae_core::divisor::enumerate_admissible;
use thomae_core::harness::{exit_code, run_suite, CheckReport, CHECK_NAMES};
use thomae_core::surface::{choose_base_point, compute_periods, PeriodOptions};
use thomae_core::{Config, Error, RunOptions, ThomaeExponents};

/// Periods, theta constants and Thomae-type checks for fiber products of
/// hyperelliptic curves.
#[derive(Parser)]
#[command(name = "thomae", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Genus, sheet count, differential basis and admissible count.
    Info {
        /// Config file, or one of the presets 1x2, 1x3, 2x2.
        config: String,
    },
    /// Period matrices A, B, tau and det C as JSON.
    Periods {
        config: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the whole suite or a single named check.
    Check {
        /// `suite`, `all`, or a check name.
        selector: String,
        config: String,
        /// JSON report path; a CSV with the same stem is written next to it.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
        #[arg(long)]
        fd_step: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Admissible labellings with their Thomae exponents.
    EnumerateBeta {
        config: String,
        #[arg(long)]
        limit: Option<usize>,
    },
}

enum Failure {
    Input(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_input_error() {
            Failure::Input(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

fn load(arg: &str) -> Result<Config, Failure> {
    let path = Path::new(arg);
    if !path.exists() {
        if let Some(c) = Config::preset(arg) {
            return Ok(c);
        }
    }
    Ok(Config::from_path(path)?)
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn info(config: &Config) -> Result<(), Failure> {
    let curve = config.curve()?;
    let basis = curve.differential_basis();
    let value = json!({
        "n": curve.n(),
        "m": curve.m(),
        "genus": curve.genus(),
        "sheets": curve.sheet_count(),
        "total_ramification": curve.total_ramification(),
        "admissible_labellings": enumerate_admissible(&curve).count(),
        "basis": basis.iter().map(|d| json!({"v": d.v, "l": d.l})).collect::<Vec<_>>(),
        "checks": CHECK_NAMES,
        "config_hash": config.hash(),
    });
    println!("{}", serde_json::to_string_pretty(&value).unwrap());
    Ok(())
}

fn periods(config: &Config, out: Option<&Path>) -> Result<(), Failure> {
    config.validate_tolerances()?;
    let curve = config.curve()?;
    let x0 = config.base_point().unwrap_or_else(|| choose_base_point(&curve));
    let opts = PeriodOptions { rel_tol: config.tolerances.integration, ..PeriodOptions::default() };
    let p = compute_periods(&curve, x0, &opts)?;
    write_or_print(out, &serde_json::to_string_pretty(&p.to_json()).unwrap())
}

fn write_csv(path: &Path, reports: &[CheckReport]) -> Result<(), Failure> {
    let io = |e: csv::Error| Failure::Input(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(["check", "instance", "status", "residual", "value", "tolerance", "wall_time_s"]).map_err(io)?;
    for r in reports {
        let status = serde_json::to_value(r.status).unwrap();
        let status = status.as_str().unwrap_or_default();
        let time = format!("{:.3}", r.wall_time_s);
        if r.residuals.is_empty() {
            w.write_record([r.check.as_str(), &r.instance, status, "", "", "", &time]).map_err(io)?;
        }
        for res in &r.residuals {
            let (v, t) = (format!("{:e}", res.value), format!("{:e}", res.tolerance));
            w.write_record([r.check.as_str(), &r.instance, status, &res.name, &v, &t, &time]).map_err(io)?;
        }
    }
    w.flush().map_err(|e| Failure::Input(e.to_string()))
}

fn check(selector: &str, config: &Config, out: Option<&Path>, run: RunOptions) -> Result<i32, Failure> {
    if !(run.tol_scale > 0.0) {
        return Err(Failure::Input("--tol-scale must be positive".into()));
    }
    if run.fd_step.is_some_and(|h| !(h > 0.0)) {
        return Err(Failure::Input("--fd-step must be positive".into()));
    }
    let reports = run_suite(config, selector, run)?;
    for r in &reports {
        eprintln!("{}", r.summary_line());
    }
    let text = serde_json::to_string_pretty(&reports).unwrap();
    if let Some(p) = out {
        write_or_print(Some(p), &text)?;
        write_csv(&p.with_extension("csv"), &reports)?;
    } else {
        println!("{text}");
    }
    Ok(exit_code(&reports))
}

fn enumerate_beta(config: &Config, limit: Option<usize>) -> Result<(), Failure> {
    let curve = config.curve()?;
    for beta in enumerate_admissible(&curve).take(limit.unwrap_or(usize::MAX)) {
        let table = ThomaeExponents::from_formula(&curve, &beta)?;
        let pairs: Vec<_> = table.pairs.iter().map(|p| json!([p.a, p.b, p.exponent.to_string()])).collect();
        let line = json!({ "beta": beta.flat(), "exponents": pairs });
        println!("{line}");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<i32, Failure> {
    match cli.command {
        Command::Info { config } => info(&load(&config)?).map(|_| 0),
        Command::Periods { config, out } => periods(&load(&config)?, out.as_deref()).map(|_| 0),
        Command::Check { selector, config, out, tol_scale, fd_step, seed } => {
            check(&selector, &load(&config)?, out.as_deref(), RunOptions { tol_scale, fd_step, seed })
        }
        Command::EnumerateBeta { config, limit } => enumerate_beta(&load(&config)?, limit).map(|_| 0),
    }
}

fn main() -> ExitCode {
    let code = match run(Cli::parse()) {
        Ok(c) => c,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            3
        }
    };
    ExitCode::from(code as u8)
}
