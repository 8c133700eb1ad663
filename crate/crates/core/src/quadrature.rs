//! Adaptive Gauss–Kronrod (7/15) quadrature for vector-valued complex
//! integrands on a real interval. All components share one subdivision,
//! which is what period computations want: one pass per path segment
//! yields the integrals of every basis differential.

use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadratureOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions { rel_tol: 1e-12, abs_tol: 1e-300, max_intervals: 4000 }
    }
}

#[derive(Debug, Clone)]
pub struct QuadratureResult {
    pub value: Vec<Complex64>,
    pub error: f64,
    pub intervals: usize,
}

struct Piece {
    a: f64,
    b: f64,
    value: Vec<Complex64>,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn max_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn kronrod<F>(f: &mut F, a: f64, b: f64, dim: usize) -> (Vec<Complex64>, f64)
where
    F: FnMut(f64) -> Vec<Complex64>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = vec![Complex64::new(0.0, 0.0); dim];
    let mut g = vec![Complex64::new(0.0, 0.0); dim];
    let fc = f(c);
    for d in 0..dim {
        k[d] += fc[d] * WGK[7];
        g[d] += fc[d] * WG[3];
    }
    for i in 0..7 {
        let x = h * XGK[i];
        let f1 = f(c - x);
        let f2 = f(c + x);
        for d in 0..dim {
            let s = f1[d] + f2[d];
            k[d] += s * WGK[i];
            if i % 2 == 1 {
                g[d] += s * WG[i / 2];
            }
        }
    }
    let mut err = 0.0f64;
    for d in 0..dim {
        k[d] *= h;
        g[d] *= h;
        err = err.max((k[d] - g[d]).norm());
    }
    (k, err)
}

/// Integrates `f` over `[a, b]` component-wise. The error criterion is the
/// max-norm over components: refinement stops once the summed error estimate
/// drops below `max(abs_tol, rel_tol * |I|_inf)`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, dim: usize, opts: &QuadratureOptions) -> Result<QuadratureResult>
where
    F: FnMut(f64) -> Vec<Complex64>,
{
    let (value, error) = kronrod(&mut f, a, b, dim);
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, value: value.clone(), error });
    let mut total = value;
    let mut total_err = error;
    let mut intervals = 1;
    loop {
        let tol = opts.abs_tol.max(opts.rel_tol * max_norm(&total));
        if total_err <= tol {
            break;
        }
        if intervals >= opts.max_intervals {
            return Err(Error::QuadratureFailure { estimate: total_err, intervals });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::QuadratureFailure { estimate: total_err, intervals });
        }
        let (v1, e1) = kronrod(&mut f, worst.a, mid, dim);
        let (v2, e2) = kronrod(&mut f, mid, worst.b, dim);
        for d in 0..dim {
            total[d] += v1[d] + v2[d] - worst.value[d];
        }
        total_err += e1 + e2 - worst.error;
        heap.push(Piece { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Piece { a: mid, b: worst.b, value: v2, error: e2 });
        intervals += 1;
    }
    // Re-sum from the pieces to shed the drift of incremental updates.
    let mut pieces = heap.into_vec();
    pieces.sort_by(|p, q| p.a.total_cmp(&q.a));
    let mut value = vec![Complex64::new(0.0, 0.0); dim];
    let mut error = 0.0;
    for p in &pieces {
        for d in 0..dim {
            value[d] += p.value[d];
        }
        error += p.error;
    }
    Ok(QuadratureResult { value, error, intervals })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(
            |t| vec![Complex64::new(t.powi(5), 0.0), Complex64::new(0.0, 3.0 * t * t)],
            0.0,
            2.0,
            2,
            &QuadratureOptions::default(),
        )
        .unwrap();
        assert!((r.value[0].re - 64.0 / 6.0).abs() < 1e-13);
        assert!((r.value[1].im - 8.0).abs() < 1e-13);
        assert_eq!(r.intervals, 1);
    }

    #[test]
    fn endpoint_singularity_converges() {
        // integral of t^{-1/2} over (0,1] is 2; nodes avoid the endpoint
        let r = integrate(|t| vec![Complex64::new(t.powf(-0.5), 0.0)], 0.0, 1.0, 1, &QuadratureOptions {
            rel_tol: 1e-10,
            ..Default::default()
        })
        .unwrap();
        assert!((r.value[0].re - 2.0).abs() < 1e-8, "{}", r.value[0]);
    }

    #[test]
    fn oscillatory_complex() {
        let r = integrate(
            |t| vec![Complex64::from_polar(1.0, 20.0 * t)],
            0.0,
            1.5,
            1,
            &QuadratureOptions::default(),
        )
        .unwrap();
        let exact = (Complex64::from_polar(1.0, 30.0) - 1.0) / Complex64::new(0.0, 20.0);
        assert!((r.value[0] - exact).norm() < 1e-13);
    }

    #[test]
    fn reports_failure_when_budget_exhausted() {
        let e = integrate(|t| vec![Complex64::new(1.0 / t, 0.0)], 0.0, 1.0, 1, &QuadratureOptions {
            max_intervals: 20,
            ..Default::default()
        });
        assert!(matches!(e, Err(Error::QuadratureFailure { .. })));
    }
}
