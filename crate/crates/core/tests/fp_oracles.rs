use pfbell_core::fp_quadrature::{
    fp_piecewise, fp_reciprocal, fp_smooth, fp_smooth_with_breakpoints, regularize_fp, PiecewiseWeight,
};
use pfbell_core::ModelConstants;
use proptest::prelude::*;

/// Composite Simpson rule; the independent reference for the smooth case.
fn simpson<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (hi - lo) / n as f64;
    let inner: f64 = (1..n)
        .map(|i| {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            w * f(lo + i as f64 * h)
        })
        .sum();
    (f(lo) + inner + f(hi)) * h / 3.0
}

fn expm1_over_x(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.exp_m1() / x
    }
}

#[test]
fn simpson_oracle_for_exponential_weight() {
    let oracle = simpson(expm1_over_x, 0.0, 1.0, 200_000);
    // frozen in the unit tests of fp_quadrature
    assert!((oracle - 1.317_902_151_454_404).abs() < 1e-12, "{oracle}");
    let r = fp_smooth(f64::exp, 1.0, 1e-10).unwrap();
    assert!((r.value - oracle).abs() < 1e-10);
}

#[test]
fn regularized_identity_across_decades() {
    let k = ModelConstants::canonical();
    let unit = PiecewiseWeight::constant(k.beta, 1.0).unwrap();
    let sign = PiecewiseWeight::sign_step(k.f, k.beta).unwrap();
    for p in 1..=8 {
        let eps = 10f64.powi(-p);
        for g in [&unit, &sign] {
            let lhs = regularize_fp(g, eps).unwrap() + g.origin_value() * eps.ln();
            assert!((lhs - fp_piecewise(g).value).abs() < 1e-12, "eps = {eps}");
        }
    }
}

#[test]
fn fixture_json_weights() {
    let k = ModelConstants::canonical();
    let json = format!(r#"{{"upper": {}, "breakpoints": [{}], "values": [1.0, -1.0]}}"#, k.beta, k.f);
    let g: PiecewiseWeight = serde_json::from_str(&json).unwrap();
    assert!((fp_piecewise(&g).value + 1.0).abs() < 1e-12);
    let constant: PiecewiseWeight = serde_json::from_str(r#"{"upper": 1.0, "values": [3.0]}"#).unwrap();
    assert_eq!(fp_piecewise(&constant).value, 0.0);
}

prop_compose! {
    fn weight()(upper in 0.2f64..5.0, n in 0usize..5)
        (upper in Just(upper),
         fractions in prop::collection::vec(0.01f64..1.0, n),
         values in prop::collection::vec(-3.0f64..3.0, n + 1)) -> PiecewiseWeight {
        let mut ts: Vec<f64> = fractions.iter().map(|f| f * upper).collect();
        ts.sort_by(f64::total_cmp);
        ts.dedup_by(|a, b| (*a - *b).abs() < 1e-6 * upper);
        let values = values[..ts.len() + 1].to_vec();
        PiecewiseWeight::new(upper, ts, values).unwrap()
    }
}

proptest! {
    #[test]
    fn counterterm_identity(g in weight(), frac in 1e-6f64..0.999) {
        let eps = frac * g.first_breakpoint();
        prop_assume!(eps > 0.0 && eps < g.first_breakpoint());
        let reg = regularize_fp(&g, eps).unwrap();
        let fp = fp_piecewise(&g).value;
        prop_assert!((reg + g.origin_value() * eps.ln() - fp).abs() < 1e-12);
    }

    #[test]
    fn linearity(g1 in weight(), g2 in weight(), alpha in -2.0f64..2.0, gamma in -2.0f64..2.0) {
        let g2 = PiecewiseWeight::new(g1.upper(), g2.breakpoints().iter().map(|t| t / g2.upper() * g1.upper()).collect(), g2.values().to_vec()).unwrap();
        let h = PiecewiseWeight::linear_combination(alpha, &g1, gamma, &g2).unwrap();
        let lhs = fp_piecewise(&h).value;
        let rhs = alpha * fp_piecewise(&g1).value + gamma * fp_piecewise(&g2).value;
        prop_assert!((lhs - rhs).abs() < 1e-12, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn logarithm_law(b1 in 1e-3f64..1e3, b2 in 1e-3f64..1e3) {
        let lhs = fp_reciprocal(b1 * b2).unwrap().value;
        let rhs = fp_reciprocal(b1).unwrap().value + fp_reciprocal(b2).unwrap().value;
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn smooth_agrees_with_piecewise(g in weight()) {
        let tol = 1e-9;
        let r = fp_smooth_with_breakpoints(|x| g.eval(x), g.upper(), tol, g.breakpoints()).unwrap();
        prop_assert!((r.value - fp_piecewise(&g).value).abs() <= tol);
    }
}
