//! Frozen calibration constants. Each was fixed once on the genus-one
//! instance `lambda = (-1/3, -1, 1, 1/3)` against closed-form elliptic
//! quantities and is not tuned per instance.

use crate::curve::C64;

/// Multiplier turning `1/2 sum_Q v_j(Q) v_k(Q)` (dt-coefficients at the
/// ramification points over `lambda`) into `d tau_jk / d lambda`.
pub const VARIATIONAL_SCALE: C64 = C64::new(0.0, std::f64::consts::TAU);

/// Multiplier `kappa` applied to the contracted Hessian
/// `sum_Q sum_rs d^2 log theta / dz_r dz_s v_r(Q) v_s(Q)` in the dt^2 check,
/// chosen so that `kappa * S = 2 d log theta / d lambda` through the heat
/// equation and the variational formula.
pub const DT2_SCALE: f64 = 0.5;

/// Version tag recorded in reports.
pub const CALIBRATION_VERSION: &str = "1";

/// Multiplier on `1/2 sum_{i,j} q_ij / ((x - lambda_i)(x - lambda_j))` giving
/// the second-order coefficient of `F_beta(P, Q) (x2 - x1)`.
pub const SZEGO_C2_SCALE: f64 = 0.5;
