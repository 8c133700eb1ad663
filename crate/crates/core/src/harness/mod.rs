pub mod checks;
pub mod config;
pub mod exponents;
pub mod report;
pub mod session;
pub mod suite;

pub use checks::CHECK_NAMES;
pub use config::{Config, FactorSpec, Tolerances};
pub use exponents::ThomaeExponents;
pub use report::{exit_code, CheckReport, Residual, Status};
pub use session::{RunOptions, Session, Setup};
pub use suite::{resolve_checks, run_named, run_suite};
