//! Riemann theta with characteristics, truncated to an ellipsoid with a
//! certified tail bound.
//!
//! `theta[a; b](z) = sum_n exp(pi i (n+a)^T tau (n+a) + 2 pi i (n+a)^T (z+b))`
//! with real `a`, `b`. The plain theta function is `a = b = 0`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, gamma_ur};

use crate::curve::C64;
use crate::error::{Error, Result};

/// Largest ellipsoid radius (in units of `sqrt(pi) T`) before giving up.
pub const MAX_RADIUS: f64 = 40.0;

#[derive(Debug, Clone)]
pub struct ThetaContext {
    tau: DMatrix<C64>,
    x: DMatrix<f64>,
    y: DMatrix<f64>,
    y_inv: DMatrix<f64>,
    /// Upper triangular with `Im tau = T^T T`.
    t: DMatrix<f64>,
    /// Shortest nonzero vector of the lattice `sqrt(pi) T Z^g`.
    rho: f64,
    /// Spectral norm of `(sqrt(pi) T)^{-1}`.
    l_inv_norm: f64,
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaValue {
    pub value: C64,
    pub grad: Option<Vec<C64>>,
    pub hessian: Option<Vec<Vec<C64>>>,
    pub error_bound: f64,
    pub radius: f64,
    pub points: usize,
}

/// Real characteristic `(a, b)`, identified with the point `b + tau a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Characteristic {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl Characteristic {
    pub fn zero(g: usize) -> Self {
        Characteristic { a: vec![0.0; g], b: vec![0.0; g] }
    }

    /// Rounds entries within `tol` of a half-integer.
    pub fn snap_half(&self, tol: f64) -> Characteristic {
        let snap = |v: f64| {
            let r = (2.0 * v).round() / 2.0;
            if (v - r).abs() < tol {
                r
            } else {
                v
            }
        };
        Characteristic { a: self.a.iter().map(|&v| snap(v)).collect(), b: self.b.iter().map(|&v| snap(v)).collect() }
    }

    pub fn is_half_period(&self) -> bool {
        self.a.iter().chain(&self.b).all(|&v| (2.0 * v).fract() == 0.0)
    }

    /// `4 a . b mod 2` for half-integer characteristics.
    pub fn parity(&self) -> Option<i64> {
        if !self.is_half_period() {
            return None;
        }
        let s: f64 = self.a.iter().zip(&self.b).map(|(a, b)| 4.0 * a * b).sum();
        Some((s.round() as i64).rem_euclid(2))
    }

    /// Representative with entries in `[0, 1)`.
    pub fn reduced(&self) -> Characteristic {
        let r = |v: f64| {
            let f = v - v.floor();
            if f > 1.0 - 1e-12 {
                0.0
            } else {
                f
            }
        };
        Characteristic { a: self.a.iter().map(|&v| r(v)).collect(), b: self.b.iter().map(|&v| r(v)).collect() }
    }
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl ThetaContext {
    pub fn new(tau: &DMatrix<C64>, eps: f64) -> Result<Self> {
        let g = tau.nrows();
        let scale = tau.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let asym = (0..g)
            .flat_map(|r| (0..g).map(move |c| (r, c)))
            .map(|(r, c)| (tau[(r, c)] - tau[(c, r)]).norm())
            .fold(0.0, f64::max);
        if asym > 1e-6 * scale {
            return Err(Error::NotSymmetric(asym));
        }
        let tau = (tau + tau.transpose()) * C64::new(0.5, 0.0);
        let x = tau.map(|z| z.re);
        let y = tau.map(|z| z.im);
        let chol = y.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
        let t = chol.l().transpose();
        let y_inv = chol.inverse();
        let l = &t * std::f64::consts::PI.sqrt();
        let l_inv = l.clone().try_inverse().ok_or(Error::NotPositiveDefinite)?;
        let l_inv_norm = l_inv.clone().singular_values().max();
        let mut ctx = ThetaContext { tau, x, y, y_inv, t, rho: 0.0, l_inv_norm, eps };
        ctx.rho = ctx.shortest_vector();
        Ok(ctx)
    }

    pub fn genus(&self) -> usize {
        self.tau.nrows()
    }

    pub fn tau(&self) -> &DMatrix<C64> {
        &self.tau
    }

    pub fn im_tau(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn im_tau_inv(&self) -> &DMatrix<f64> {
        &self.y_inv
    }

    /// Length of the shortest nonzero vector of `sqrt(pi) T Z^g`.
    fn shortest_vector(&self) -> f64 {
        let g = self.genus();
        let sp = std::f64::consts::PI.sqrt();
        let mut best = (0..g).map(|i| sp * (0..g).map(|r| self.t[(r, i)].powi(2)).sum::<f64>().sqrt()).fold(f64::INFINITY, f64::min);
        let zero = vec![0.0; g];
        self.enumerate(&zero, &zero, best * best / std::f64::consts::PI, |w| {
            if w.iter().any(|&v| v != 0.0) {
                let tw = &self.t * DVector::from_row_slice(w);
                best = best.min(sp * tw.norm());
            }
        });
        best
    }

    /// Calls `f(w)` for every `w = n + a`, `n` integral, with
    /// `|T (w - c)|^2 <= r2`.
    fn enumerate<F: FnMut(&[f64])>(&self, a: &[f64], c: &[f64], r2: f64, mut f: F) {
        let g = self.genus();
        let mut x = vec![0.0; g];
        let mut w = vec![0.0; g];
        if g == 0 {
            f(&w);
            return;
        }
        self.enumerate_level(g - 1, a, c, r2, &mut x, &mut w, &mut f);
    }

    #[allow(clippy::too_many_arguments)]
    fn enumerate_level<F: FnMut(&[f64])>(
        &self,
        i: usize,
        a: &[f64],
        c: &[f64],
        rem: f64,
        x: &mut [f64],
        w: &mut [f64],
        f: &mut F,
    ) {
        let g = self.genus();
        let s: f64 = (i + 1..g).map(|j| self.t[(i, j)] * x[j]).sum();
        let tii = self.t[(i, i)];
        let r = rem.max(0.0).sqrt();
        // x_i = n_i + a_i - c_i within [(-s - r)/tii, (-s + r)/tii]
        let lo = ((-s - r) / tii - a[i] + c[i]).ceil() as i64;
        let hi = ((-s + r) / tii - a[i] + c[i]).floor() as i64;
        for n in lo..=hi {
            x[i] = n as f64 + a[i] - c[i];
            w[i] = n as f64 + a[i];
            let v = tii * x[i] + s;
            let left = rem - v * v;
            if left < 0.0 {
                continue;
            }
            if i == 0 {
                f(w);
            } else {
                self.enumerate_level(i - 1, a, c, left, x, w, f);
            }
        }
    }

    /// Tail bound for derivative order `order` outside radius `r`
    /// (in the `sqrt(pi) T` metric), relative to the unit weight
    /// `exp(pi Im z^T Y^{-1} Im z)`.
    fn tail_bound(&self, r: f64, order: usize, shift_norm: f64) -> f64 {
        let g = self.genus() as f64;
        let rho = self.rho;
        if r <= rho / 2.0 {
            return f64::INFINITY;
        }
        let x = (r - rho / 2.0).powi(2);
        let lead = g / 2.0 * (2.0 / rho).powf(g);
        let mut total = 0.0;
        for k in 0..=order {
            let s = (g + k as f64) / 2.0;
            let upper = gamma_ur(s, x) * gamma(s);
            total += binom(order, k) * self.l_inv_norm.powi(k as i32) * shift_norm.powi((order - k) as i32) * upper;
        }
        (2.0 * std::f64::consts::PI).powi(order as i32) * lead * total
    }

    fn radius_for(&self, order: usize, shift_norm: f64, weight: f64) -> Result<(f64, f64)> {
        let target = self.eps / weight.max(1e-300);
        let mut r = self.rho / 2.0 + 0.5;
        loop {
            let b = self.tail_bound(r, order, shift_norm);
            if b < target {
                return Ok((r, b * weight));
            }
            r += 0.25;
            if r > MAX_RADIUS {
                return Err(Error::TruncationOverflow { radius: r });
            }
        }
    }

    /// Theta with characteristic and derivatives up to `order` (0, 1 or 2).
    pub fn eval_char(&self, ch: &Characteristic, z: &[C64], order: usize) -> Result<ThetaValue> {
        let g = self.genus();
        if z.len() != g || ch.a.len() != g || ch.b.len() != g {
            return Err(Error::Config(format!("theta argument has length {}, genus is {g}", z.len())));
        }
        if z.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Config("theta argument is not finite".into()));
        }
        let pi = std::f64::consts::PI;
        let im_z = DVector::from_iterator(g, z.iter().map(|v| v.im));
        let c = -(&self.y_inv * &im_z);
        let weight = (pi * im_z.dot(&(&self.y_inv * &im_z))).exp();
        let shift_norm = c.iter().zip(&ch.a).map(|(ci, ai)| (ci - ai).powi(2)).sum::<f64>().sqrt() + 1.0;
        let (radius, error_bound) = self.radius_for(order, shift_norm, weight)?;
        let re_zb: Vec<f64> = z.iter().zip(&ch.b).map(|(v, b)| v.re + b).collect();
        let mut value = C64::new(0.0, 0.0);
        let mut grad = vec![C64::new(0.0, 0.0); g];
        let mut hess = vec![vec![C64::new(0.0, 0.0); g]; g];
        let mut points = 0usize;
        let c_vec: Vec<f64> = c.iter().copied().collect();
        self.enumerate(&ch.a, &c_vec, radius * radius / pi, |w| {
            points += 1;
            let mut quad_x = 0.0;
            let mut quad_y = 0.0;
            for r in 0..g {
                let mut sx = 0.0;
                let mut sy = 0.0;
                for s in 0..g {
                    sx += self.x[(r, s)] * w[s];
                    sy += self.y[(r, s)] * w[s];
                }
                quad_x += w[r] * sx;
                quad_y += w[r] * sy;
            }
            let lin_re: f64 = w.iter().zip(&re_zb).map(|(a, b)| a * b).sum();
            let lin_im: f64 = w.iter().zip(z).map(|(a, b)| a * b.im).sum();
            let term = C64::from_polar((-pi * quad_y - 2.0 * pi * lin_im).exp(), pi * quad_x + 2.0 * pi * lin_re);
            value += term;
            if order >= 1 {
                for r in 0..g {
                    let d = C64::new(0.0, 2.0 * pi * w[r]);
                    grad[r] += term * d;
                    if order >= 2 {
                        for s in r..g {
                            hess[r][s] += term * (-(4.0 * pi * pi) * w[r] * w[s]);
                        }
                    }
                }
            }
        });
        for r in 0..g {
            for s in 0..r {
                hess[r][s] = hess[s][r];
            }
        }
        Ok(ThetaValue {
            value,
            grad: (order >= 1).then_some(grad),
            hessian: (order >= 2).then_some(hess),
            error_bound,
            radius,
            points,
        })
    }

    pub fn theta(&self, z: &[C64]) -> Result<ThetaValue> {
        self.eval_char(&Characteristic::zero(self.genus()), z, 0)
    }

    pub fn theta_grad(&self, z: &[C64]) -> Result<ThetaValue> {
        self.eval_char(&Characteristic::zero(self.genus()), z, 1)
    }

    pub fn theta_hessian(&self, z: &[C64]) -> Result<ThetaValue> {
        self.eval_char(&Characteristic::zero(self.genus()), z, 2)
    }

    /// Hessian of `log theta[ch]` at `z`. Fails with `NearVanishing` when
    /// `|theta|` is below `threshold`.
    pub fn theta_hessian_log(&self, ch: &Characteristic, z: &[C64], threshold: f64) -> Result<DMatrix<C64>> {
        let v = self.eval_char(ch, z, 2)?;
        if v.value.norm() < threshold {
            return Err(Error::NearVanishing { value: v.value.norm() });
        }
        let g = self.genus();
        let grad = v.grad.expect("order 2");
        let hess = v.hessian.expect("order 2");
        Ok(DMatrix::from_fn(g, g, |r, s| hess[r][s] / v.value - grad[r] * grad[s] / (v.value * v.value)))
    }

    /// Characteristic `(a, b)` with `e = b + tau a`.
    pub fn characteristic_of(&self, e: &[C64]) -> Characteristic {
        let g = self.genus();
        let im = DVector::from_iterator(g, e.iter().map(|v| v.im));
        let a = &self.y_inv * im;
        let re = DVector::from_iterator(g, e.iter().map(|v| v.re));
        let b = re - &self.x * &a;
        Characteristic { a: a.iter().copied().collect(), b: b.iter().copied().collect() }
    }

    pub fn point_of(&self, ch: &Characteristic) -> Vec<C64> {
        let g = self.genus();
        (0..g)
            .map(|r| {
                let s: C64 = (0..g).map(|c| self.tau[(r, c)] * ch.a[c]).sum();
                s + ch.b[r]
            })
            .collect()
    }

    /// `|theta(z)| exp(-pi Im z^T Y^{-1} Im z)`, invariant under lattice shifts.
    pub fn invariant_modulus(&self, z: &[C64]) -> Result<f64> {
        let g = self.genus();
        let im = DVector::from_iterator(g, z.iter().map(|v| v.im));
        let w = (-std::f64::consts::PI * im.dot(&(&self.y_inv * &im))).exp();
        Ok(self.theta(z)?.value.norm() * w)
    }
}
