//! Arithmetic-geometric mean oracle for genus-one period ratios.

use crate::curve::C64;
use crate::error::{Error, Result};

pub fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        if (a - b).abs() <= 1e-16 * a.abs() {
            break;
        }
        let m = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = m;
    }
    a
}

/// Complete elliptic integral `K(k)` for parameter `k^2` in `(0, 1)`.
pub fn complete_k(k2: f64) -> f64 {
    std::f64::consts::FRAC_PI_2 / agm(1.0, (1.0 - k2).sqrt())
}

/// `tau = i K(k') / K(k)` for `y^2 = prod (x - e_i)` with four real roots, where
/// `k^2 = (e4 - e3)(e2 - e1) / ((e4 - e2)(e3 - e1))` for sorted roots.
pub fn tau_from_real_roots(roots: &[f64]) -> Result<C64> {
    if roots.len() != 4 || roots.iter().any(|r| !r.is_finite()) {
        return Err(Error::Config("the elliptic oracle needs four finite real roots".into()));
    }
    let mut e = roots.to_vec();
    e.sort_by(f64::total_cmp);
    let k2 = (e[3] - e[2]) * (e[1] - e[0]) / ((e[3] - e[1]) * (e[2] - e[0]));
    Ok(C64::new(0.0, complete_k(1.0 - k2) / complete_k(k2)))
}

/// Representative of `tau` in the standard fundamental domain of `SL(2, Z)`.
pub fn reduce_modular(mut tau: C64) -> C64 {
    for _ in 0..1000 {
        tau.re -= tau.re.round();
        if tau.norm_sqr() < 1.0 - 1e-15 {
            tau = -tau.inv();
        } else {
            break;
        }
    }
    if (tau.re + 0.5).abs() < 1e-15 {
        tau.re = 0.5;
    }
    tau
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lemniscatic_and_legendre_values() {
        // K(1/2) = Gamma(1/4)^2 / (4 sqrt(pi))
        let k = complete_k(0.5);
        assert!((k - 1.854_074_677_301_372).abs() < 1e-14);
        let t = tau_from_real_roots(&[-1.0 / 3.0, -1.0, 1.0, 1.0 / 3.0]).unwrap();
        assert!(t.re == 0.0 && t.im > 1.0);
        let a = 3.0 + 2.0 * 2f64.sqrt();
        let sq = tau_from_real_roots(&[-a, -1.0, 1.0, a]).unwrap();
        assert!((sq.im - 1.0).abs() < 1e-14);
    }

    #[test]
    fn modular_reduction() {
        let t = C64::new(0.3, 1.7);
        let moved = -(t + 2.0).inv() + 5.0;
        assert!((reduce_modular(moved) - t).norm() < 1e-12);
    }
}
