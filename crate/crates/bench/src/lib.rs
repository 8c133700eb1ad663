//! Fixtures shared by the benchmarks.

use thomae_core::surface::compute_periods_default;
use thomae_core::{Config, FiberProductCurve, PeriodData};

pub fn preset_curve(name: &str) -> FiberProductCurve {
    Config::preset(name).expect("known preset").curve().expect("valid preset")
}

pub fn preset_periods(name: &str) -> PeriodData {
    compute_periods_default(&preset_curve(name)).expect("periods")
}
