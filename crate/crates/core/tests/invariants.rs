use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use proptest::prelude::*;
use thomae_core::curve::character;
use thomae_core::divisor::{q_exponent, r_minus_d, tau_profile};
use thomae_core::surface::compute_periods_default;
use thomae_core::{AutomorphismElement, BetaVector, Config, FiberProductCurve, Sheet, ThetaContext, C64};

fn genus_two_context() -> &'static ThetaContext {
    static CTX: OnceLock<ThetaContext> = OnceLock::new();
    CTX.get_or_init(|| {
        let curve = Config::preset("1x3").unwrap().curve().unwrap();
        let p = compute_periods_default(&curve).unwrap();
        ThetaContext::new(&p.tau, 1e-14).unwrap()
    })
}

fn line_curve(n: usize, m: usize) -> FiberProductCurve {
    let rows = (0..n)
        .map(|j| (0..2 * m).map(|i| C64::new(i as f64 * 1.3 - m as f64 + 0.25 * j as f64, 0.1 + 0.4 * j as f64)).collect())
        .collect();
    FiberProductCurve::validate(n, m, rows).unwrap()
}

fn z_strategy(g: usize) -> impl Strategy<Value = Vec<C64>> {
    proptest::collection::vec((-1.0f64..1.0, -0.6f64..0.6).prop_map(|(re, im)| C64::new(re, im)), g)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn theta_is_even(z in z_strategy(2)) {
        let ctx = genus_two_context();
        let minus: Vec<C64> = z.iter().map(|w| -w).collect();
        let a = ctx.theta(&z).unwrap().value;
        let b = ctx.theta(&minus).unwrap().value;
        prop_assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
    }

    #[test]
    fn theta_quasi_periodicity(z in z_strategy(2), i in 0usize..2) {
        let ctx = genus_two_context();
        let tau: &DMatrix<C64> = ctx.tau();
        let base = ctx.theta(&z).unwrap().value;
        let mut shifted = z.clone();
        shifted[i] += 1.0;
        let a = ctx.theta(&shifted).unwrap().value;
        prop_assert!((a - base).norm() <= 1e-12 * base.norm().max(1.0));
        let mut shifted = z.clone();
        for (r, w) in shifted.iter_mut().enumerate() {
            *w += tau[(r, i)];
        }
        let factor = (C64::new(0.0, -PI) * tau[(i, i)] - C64::new(0.0, 2.0 * PI) * z[i]).exp();
        let b = ctx.theta(&shifted).unwrap().value;
        prop_assert!((b - factor * base).norm() <= 1e-10 * b.norm().max(1e-300), "{} vs {}", b, factor * base);
    }

    #[test]
    fn automorphisms_act_on_points_and_differentials(bits in 0u32..4, sheet in 0u32..4, re in -3.0f64..3.0, im in 0.2f64..2.0) {
        let curve = line_curve(2, 2);
        let sigma = AutomorphismElement { bits };
        let p = curve.point_with_signs(C64::new(re, im), Sheet(sheet));
        let q = sigma.apply(&p);
        prop_assert!(curve.is_on_curve(&q));
        prop_assert_eq!(sigma.compose(&sigma).apply(&p), p.clone());
        for d in curve.differential_basis() {
            let before = curve.evaluate_differential(d, &p).unwrap();
            let after = curve.evaluate_differential(d, &q).unwrap();
            let chi = character(d.v, Sheet(bits));
            prop_assert!((after - before * chi).norm() <= 1e-12 * before.norm());
        }
    }

    #[test]
    fn q_is_symmetric(n in 1usize..=3, m in 1usize..=3, bits in any::<u64>(), a in any::<usize>(), b in any::<usize>()) {
        let curve = line_curve(n, m);
        let nb = curve.branch_count();
        let beta = BetaVector::from_bits(n, m, bits & ((1u64 << nb) - 1));
        let (a, b) = (a % nb, b % nb);
        prop_assume!(a != b);
        let (pa, pb) = (curve.branch_id(a), curve.branch_id(b));
        prop_assert_eq!(q_exponent(&curve, &beta, pa, pb).unwrap(), q_exponent(&curve, &beta, pb, pa).unwrap());
    }

    #[test]
    fn tau_profile_sums_to_zero(n in 1usize..=4, m in 1usize..=4, bits in any::<u64>()) {
        let curve = line_curve(n, m);
        let beta = BetaVector::from_bits(n, m, bits & ((1u64 << curve.branch_count()) - 1));
        prop_assert_eq!(tau_profile(&curve, &beta).unwrap().sum(), 0);
    }
}

/// Dimension of polynomials of degree `<= d` vanishing at `points`.
fn vanishing_polynomials(d: i64, points: &[f64]) -> i64 {
    if d < 0 {
        return 0;
    }
    let cols = d as usize + 1;
    if points.is_empty() {
        return cols as i64;
    }
    let v = DMatrix::from_fn(points.len(), cols, |r, c| points[r].powi(c as i32));
    let rank = v.svd(false, false).rank(1e-9);
    cols as i64 - rank as i64
}

/// `l(D)` for `D = sum_{k in S} P_k - inf_+ - inf_-` on `y^2 = prod (x - lambda_k)`
/// of degree `2m`. Any `f` in `L(D)` splits into even and odd parts under the
/// hyperelliptic involution, `A(x) + B(x) y / h_S(x)`, with `A` a polynomial
/// vanishing at infinity and `B` a polynomial with `deg B + m - |S| <= -1`.
fn l_of_d(subset: &[usize], m: usize) -> i64 {
    let even = vanishing_polynomials(-1, &[]);
    let odd = vanishing_polynomials(subset.len() as i64 - m as i64 - 1, &[]);
    even + odd
}

/// `l(K - D)` with `K = (g - 1)(inf_+ + inf_-)`: polynomials of degree
/// `<= m - 1` vanishing on the chosen branch points; odd parts cannot occur.
fn l_of_k_minus_d(lambdas: &[f64], subset: &[usize], m: usize) -> i64 {
    let pts: Vec<f64> = subset.iter().map(|&k| lambdas[k]).collect();
    vanishing_polynomials(m as i64 - 1, &pts)
}

#[test]
fn single_factor_r_matches_riemann_roch_spaces() {
    for m in 1..=4usize {
        let lambdas: Vec<f64> = (0..2 * m).map(|i| (i as f64 - m as f64) * 0.7 + 0.1).collect();
        let curve = FiberProductCurve::validate(1, m, vec![lambdas.iter().map(|&l| C64::new(l, 0.0)).collect()]).unwrap();
        for bits in 0u64..1 << (2 * m) {
            let beta = BetaVector::from_bits(1, m, bits);
            let subset: Vec<usize> = (0..2 * m).filter(|&k| bits >> k & 1 == 1).collect();
            let expected = l_of_d(&subset, m) + l_of_k_minus_d(&lambdas, &subset, m);
            assert_eq!(r_minus_d(&curve, &beta).unwrap(), expected, "m = {m}, beta = {:?}", beta.flat());
        }
    }
}
