//! Analytic continuation of the sheet values `y_j` along piecewise linear
//! paths in the x-plane.

use serde::{Deserialize, Serialize};

use crate::curve::{FiberProductCurve, SurfacePoint, C64};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuationOptions {
    /// Minimal admissible distance from a segment to any branch point.
    pub clearance: f64,
    /// Largest step taken along a segment.
    pub max_step: f64,
    /// Smallest step before giving up.
    pub min_step: f64,
    /// Maximal relative change `|dy_j| / |y_j|` per step.
    pub tolerance: f64,
}

impl ContinuationOptions {
    pub fn for_curve(curve: &FiberProductCurve) -> Self {
        let sep = curve.min_branch_separation();
        ContinuationOptions { clearance: 1e-3 * sep, max_step: 0.25 * sep, min_step: 1e-12 * sep, tolerance: 0.25 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SheetTrackedPath {
    pub waypoints: Vec<C64>,
    pub y_tracks: Vec<Vec<C64>>,
    pub options: ContinuationOptions,
}

impl SheetTrackedPath {
    pub fn end(&self) -> &[C64] {
        self.y_tracks.last().expect("path has at least one point")
    }
}

/// Distance from `p` to the segment `[a, b]`.
pub fn segment_distance(a: C64, b: C64, p: C64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a) * d.conj()).re / len2;
    (a + d * t.clamp(0.0, 1.0) - p).norm()
}

/// Adaptive continuation: at each step every `y_j` is re-solved as a square
/// root of `f_j` and the sign nearest the previous value is kept. The step is
/// halved until each `y_j` moves by at most `tolerance * |y_j|`, well inside
/// half the gap `2|y_j|` between the two branches.
pub fn continue_sheets(
    curve: &FiberProductCurve,
    path: &[C64],
    start: &SurfacePoint,
    options: &ContinuationOptions,
) -> Result<SheetTrackedPath> {
    if path.is_empty() {
        return Err(Error::Config("empty continuation path".into()));
    }
    for w in path.windows(2) {
        for k in 0..curve.branch_count() {
            let dist = segment_distance(w[0], w[1], curve.lambda(k));
            if dist < options.clearance {
                return Err(Error::ClearanceViolation { branch: k, distance: dist, clearance: options.clearance });
            }
        }
    }
    let mut y = start.y.clone();
    let mut waypoints = vec![path[0]];
    let mut y_tracks = vec![y.clone()];
    for w in path.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = (b - a).norm();
        let mut t = 0.0;
        let mut step = options.max_step.min(len);
        while t < len {
            let h = step.min(len - t);
            let x = a + (b - a) * ((t + h) / len);
            let mut ok = true;
            let mut next = Vec::with_capacity(y.len());
            for (f, &prev) in curve.factors().iter().zip(&y) {
                let mut r = f.eval(x).sqrt();
                if (r - prev).norm() > (r + prev).norm() {
                    r = -r;
                }
                if (r - prev).norm() > options.tolerance * prev.norm().min(r.norm()) {
                    ok = false;
                    break;
                }
                next.push(r);
            }
            if !ok {
                step = h * 0.5;
                if step < options.min_step {
                    return Err(Error::StepUnderflow { x: format!("{x}"), min_step: options.min_step });
                }
                continue;
            }
            y = next;
            t += h;
            waypoints.push(x);
            y_tracks.push(y.clone());
            step = (h * 2.0).min(options.max_step);
        }
    }
    Ok(SheetTrackedPath { waypoints, y_tracks, options: *options })
}

/// Exact continuation of `y_j` along the straight segment from `xa` to
/// `xa + t (xb - xa)`, given `y_j(xa)`. Each factor `(x - lambda)/(xa - lambda)`
/// runs along a segment starting at 1 that meets the non-positive axis only if
/// `lambda` lies on the path, so principal roots are continuous.
pub fn segment_factor_ratio(lambdas: &[C64], xa: C64, xb: C64, t: f64) -> C64 {
    let d = (xb - xa) * t;
    lambdas.iter().fold(C64::new(1.0, 0.0), |acc, &l| acc * (C64::new(1.0, 0.0) + d / (xa - l)).sqrt())
}

/// All `y_j` continued along a straight segment.
pub fn continue_on_segment(curve: &FiberProductCurve, xa: C64, ya: &[C64], xb: C64, t: f64) -> Vec<C64> {
    curve
        .factors()
        .iter()
        .zip(ya)
        .map(|(f, &y)| y * segment_factor_ratio(&f.branch_points, xa, xb, t))
        .collect()
}

/// Continues along a polyline with the closed form on each segment.
pub fn continue_on_polyline(curve: &FiberProductCurve, path: &[C64], y0: &[C64]) -> Vec<C64> {
    let mut y = y0.to_vec();
    for w in path.windows(2) {
        y = continue_on_segment(curve, w[0], &y, w[1], 1.0);
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::Sheet;
    use std::f64::consts::TAU;

    fn curve() -> FiberProductCurve {
        FiberProductCurve::validate(
            2,
            2,
            vec![
                vec![C64::new(-2.0, 0.0), C64::new(-1.0, 0.0), C64::new(1.0, 0.0), C64::new(2.0, 0.0)],
                vec![C64::new(-3.0, 0.0), C64::new(-1.5, 0.0), C64::new(1.5, 0.0), C64::new(3.0, 0.0)],
            ],
        )
        .unwrap()
    }

    fn circle(c: C64, r: f64, from: C64, n: usize) -> Vec<C64> {
        let phi0 = (from - c).arg();
        (0..=n).map(|s| c + C64::from_polar(r, phi0 + TAU * s as f64 / n as f64)).collect()
    }

    fn loop_around(center: C64, base: C64, r: f64) -> Vec<C64> {
        let dir = (center - base) / (center - base).norm();
        let near = center - dir * r;
        let mut path = vec![base, near];
        path.extend(circle(center, r, near, 48).into_iter().skip(1));
        path.push(base);
        path
    }

    #[test]
    fn contractible_loop_returns() {
        let x = curve();
        let base = C64::new(0.1, 0.7);
        let p = x.principal_point(base);
        let opts = ContinuationOptions::for_curve(&x);
        let path = loop_around(C64::new(0.0, 0.3), base, 0.2);
        let tr = continue_sheets(&x, &path, &p, &opts).unwrap();
        for (a, b) in tr.end().iter().zip(&p.y) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn loop_around_one_branch_point_flips_its_factor() {
        let x = curve();
        let base = C64::new(0.1, 0.7);
        let p = x.principal_point(base);
        let opts = ContinuationOptions::for_curve(&x);
        let tr = continue_sheets(&x, &loop_around(C64::new(1.0, 0.0), base, 0.2), &p, &opts).unwrap();
        assert!((tr.end()[0] + p.y[0]).norm() < 1e-10);
        assert!((tr.end()[1] - p.y[1]).norm() < 1e-10);
        let tr = continue_sheets(&x, &loop_around(C64::new(1.5, 0.0), base, 0.2), &p, &opts).unwrap();
        assert!((tr.end()[0] - p.y[0]).norm() < 1e-10);
        assert!((tr.end()[1] + p.y[1]).norm() < 1e-10);
    }

    #[test]
    fn loop_around_two_points_of_one_factor_is_trivial() {
        let x = curve();
        let base = C64::new(0.0, 2.0);
        let p = x.point_with_signs(base, Sheet(3));
        let opts = ContinuationOptions::for_curve(&x);
        let near = C64::new(0.0, 1.2);
        let mut path = vec![base, near];
        path.extend(circle(C64::new(0.0, 0.0), 1.2, near, 64).into_iter().skip(1));
        path.push(base);
        let enclosed: Vec<_> = (0..8).filter(|&k| x.lambda(k).norm() < 1.2).collect();
        assert_eq!(enclosed, vec![1, 2]);
        let tr = continue_sheets(&x, &path, &p, &opts).unwrap();
        for (a, b) in tr.end().iter().zip(&p.y) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn clearance_is_enforced() {
        let x = curve();
        let p = x.principal_point(C64::new(0.0, 1.0));
        let opts = ContinuationOptions::for_curve(&x);
        let e = continue_sheets(&x, &[C64::new(0.0, 1.0), C64::new(2.0, -1.0)], &p, &opts);
        assert!(matches!(e, Err(Error::ClearanceViolation { branch: 2, .. })));
    }

    #[test]
    fn closed_form_matches_adaptive() {
        let x = curve();
        let base = C64::new(0.1, 0.7);
        let p = x.principal_point(base);
        let path = [base, C64::new(2.5, 0.4), C64::new(2.6, -0.9), C64::new(-0.3, -0.5)];
        let tr = continue_sheets(&x, &path, &p, &ContinuationOptions::for_curve(&x)).unwrap();
        let y = continue_on_polyline(&x, &path, &p.y);
        for (a, b) in y.iter().zip(tr.end()) {
            assert!((a - b).norm() < 1e-12 * (1.0 + a.norm()));
        }
        let q = SurfacePoint { x: path[3], y: y.clone(), branch: None };
        assert!(x.is_on_curve(&q));
    }
}
