//! Hadamard finite parts `Fp ∫₀^b g(λ)/λ dλ`.
//!
//! For a weight bounded at the origin the finite part is
//! `lim_{ε→0} [∫_ε^b g(λ)/λ dλ + g(0⁺)·ln ε]`. Piecewise-constant weights give
//! a closed form in logarithms; smooth weights go through the subtraction
//! `∫₀^b (g(λ) − g(0))/λ dλ + g(0)·ln b`.
//!
//! The singular factor only lives on `λ > 0` (θ vanishes on the negative half),
//! so everything here works on `[0, upper]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

/// A piecewise-constant weight on `(0, upper]`.
///
/// `breakpoints` are strictly increasing in `(0, upper]`; there is one more value
/// than breakpoints. `values[0]` holds on `(0, t₁]`, `values[i]` on `(tᵢ, tᵢ₊₁]`
/// and the last value on `(t_last, upper]`. A breakpoint at `upper` leaves an
/// empty last segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWeight")]
pub struct PiecewiseWeight {
    upper: f64,
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct RawWeight {
    upper: f64,
    #[serde(default)]
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<RawWeight> for PiecewiseWeight {
    type Error = Error;

    fn try_from(raw: RawWeight) -> Result<Self> {
        PiecewiseWeight::new(raw.upper, raw.breakpoints, raw.values)
    }
}

impl PiecewiseWeight {
    pub fn new(upper: f64, breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if !(upper.is_finite() && upper > 0.0) {
            return Err(Error::domain(format!("upper limit must be positive and finite, got {upper}")));
        }
        if values.len() != breakpoints.len() + 1 {
            return Err(Error::domain(format!(
                "expected {} values for {} breakpoints, got {}",
                breakpoints.len() + 1,
                breakpoints.len(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::domain(format!("weight values must be finite, got {v}")));
        }
        let mut previous = 0.0;
        for &t in &breakpoints {
            if !(t > previous && t <= upper) {
                return Err(Error::domain(format!(
                    "breakpoints must be strictly increasing within (0, {upper}], got {breakpoints:?}"
                )));
            }
            previous = t;
        }
        Ok(Self { upper, breakpoints, values })
    }

    /// `g ≡ value` on `(0, upper]`.
    pub fn constant(upper: f64, value: f64) -> Result<Self> {
        Self::new(upper, Vec::new(), vec![value])
    }

    /// `g(λ) = sign(step − λ)`: +1 up to and including `step`, −1 beyond.
    ///
    /// If `step ≥ upper` there is no sign flip inside the interval and the
    /// weight is the constant +1.
    pub fn sign_step(step: f64, upper: f64) -> Result<Self> {
        if step.is_nan() || step <= 0.0 {
            return Err(Error::domain(format!("step position must be positive, got {step}")));
        }
        if step >= upper {
            Self::constant(upper, 1.0)
        } else {
            Self::new(upper, vec![step], vec![1.0, -1.0])
        }
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `g(0⁺)`.
    pub fn origin_value(&self) -> f64 {
        self.values[0]
    }

    /// First breakpoint, or `upper` for a constant weight.
    pub fn first_breakpoint(&self) -> f64 {
        self.breakpoints.first().copied().unwrap_or(self.upper)
    }

    /// `g(λ)` for `λ ∈ [0, upper]`; `g(0)` is taken as `g(0⁺)`.
    pub fn eval(&self, lambda: f64) -> f64 {
        let idx = self.breakpoints.partition_point(|&t| t < lambda);
        self.values[idx]
    }

    /// Segment end points `0 = s₀ < s₁ < … ≤ upper` paired with the value on each.
    fn segments(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let ends = self.breakpoints.iter().copied().chain(std::iter::once(self.upper));
        let starts = std::iter::once(0.0).chain(self.breakpoints.iter().copied());
        starts.zip(ends).zip(self.values.iter().copied()).map(|((lo, hi), v)| (lo, hi, v))
    }

    /// `α·g₁ + γ·g₂` on the merged breakpoint set. Both weights must share `upper`.
    pub fn linear_combination(alpha: f64, g1: &Self, gamma: f64, g2: &Self) -> Result<Self> {
        if g1.upper != g2.upper {
            return Err(Error::domain(format!(
                "cannot combine weights with different upper limits ({} vs {})",
                g1.upper, g2.upper
            )));
        }
        let mut merged: Vec<f64> = g1.breakpoints.iter().chain(&g2.breakpoints).copied().collect();
        merged.sort_by(f64::total_cmp);
        merged.dedup();
        let mut values = Vec::with_capacity(merged.len() + 1);
        let mut lo = 0.0;
        for &t in merged.iter().chain(std::iter::once(&g1.upper)) {
            // any interior point identifies the segment; an empty last segment takes its right limit
            let probe = if t > lo { 0.5 * (lo + t) } else { t };
            values.push(alpha * g1.eval_open(probe) + gamma * g2.eval_open(probe));
            lo = t;
        }
        Self::new(g1.upper, merged, values)
    }

    // Like `eval` but an empty trailing segment reports its own value.
    fn eval_open(&self, lambda: f64) -> f64 {
        if lambda >= self.upper {
            return *self.values.last().expect("values is non-empty");
        }
        self.eval(lambda)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FpMethod {
    ClosedForm,
    Subtraction,
    RegularizedExtrapolation,
}

/// A finite-part value with how it was obtained. `error_estimate` is exactly
/// zero for closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinitePartValue {
    pub value: f64,
    pub method: FpMethod,
    pub error_estimate: f64,
}

impl FinitePartValue {
    fn closed_form(value: f64) -> Self {
        Self { value, method: FpMethod::ClosedForm, error_estimate: 0.0 }
    }
}

/// `Fp ∫₀^upper dλ/λ = ln(upper)`.
pub fn fp_reciprocal(upper: f64) -> Result<FinitePartValue> {
    if !(upper.is_finite() && upper > 0.0) {
        return Err(Error::domain(format!("upper limit must be positive, got {upper}")));
    }
    Ok(FinitePartValue::closed_form(upper.ln()))
}

/// Closed-form finite part of a piecewise-constant weight:
/// `g(0⁺)·ln t₁ + Σᵢ gᵢ·ln(tᵢ₊₁/tᵢ)`.
pub fn fp_piecewise(g: &PiecewiseWeight) -> FinitePartValue {
    let value = g.segments().map(|(lo, hi, v)| if lo == 0.0 { v * hi.ln() } else { v * (hi / lo).ln() }).sum();
    FinitePartValue::closed_form(value)
}

/// `I(ε) = ∫_ε^upper g(λ)/λ dλ` for `ε` strictly below the first breakpoint.
///
/// In that regime `I(ε) + g(0⁺)·ln ε` equals [`fp_piecewise`] identically, so
/// `I` is exactly affine in `ln ε`. `ε = upper` is accepted for weights with no
/// breakpoint below `upper` and returns 0.
pub fn regularize_fp(g: &PiecewiseWeight, epsilon: f64) -> Result<f64> {
    let first = g.first_breakpoint();
    if epsilon == g.upper && first == g.upper {
        return Ok(0.0);
    }
    if !(epsilon > 0.0 && epsilon < first) {
        return Err(Error::domain(format!("epsilon must lie in (0, {first}) (first breakpoint), got {epsilon}")));
    }
    Ok(g.segments()
        .map(|(lo, hi, v)| {
            let lo = if lo == 0.0 { epsilon } else { lo };
            v * (hi / lo).ln()
        })
        .sum())
}

const SMOOTH_MAX_SEGMENTS: usize = 20_000;

/// Finite part of a bounded weight by subtraction of its value at the origin:
/// `∫₀^upper (g(λ) − g(0))/λ dλ + g(0)·ln upper`.
///
/// `g` is evaluated at `0.0` for `g(0⁺)`, so it must be right-continuous there.
/// The subtracted integrand is finite and is handed to adaptive Gauss–Kronrod
/// quadrature, which never evaluates at the endpoints.
pub fn fp_smooth<F: Fn(f64) -> f64>(g: F, upper: f64, tol: f64) -> Result<FinitePartValue> {
    fp_smooth_with_breakpoints(g, upper, tol, &[])
}

/// [`fp_smooth`] for weights with known jumps: the quadrature is split at
/// `breakpoints` so that each piece is smooth.
pub fn fp_smooth_with_breakpoints<F: Fn(f64) -> f64>(
    g: F,
    upper: f64,
    tol: f64,
    breakpoints: &[f64],
) -> Result<FinitePartValue> {
    if !(upper.is_finite() && upper > 0.0) {
        return Err(Error::domain(format!("upper limit must be positive, got {upper}")));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::domain(format!("tolerance must be positive, got {tol}")));
    }
    let origin = g(0.0);
    if !origin.is_finite() {
        return Err(Error::domain("weight must be bounded at the origin"));
    }
    let counterterm = origin * upper.ln();
    let subtracted = |lambda: f64| (g(lambda) - origin) / lambda;
    match quadrature::integrate_with_points(subtracted, 0.0, upper, breakpoints, tol, SMOOTH_MAX_SEGMENTS) {
        Ok(r) => {
            Ok(FinitePartValue { value: r.value + counterterm, method: FpMethod::Subtraction, error_estimate: r.error })
        }
        Err(Error::Computation { message, best_estimate, error_estimate }) => {
            Err(Error::Computation { message, best_estimate: best_estimate + counterterm, error_estimate })
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::ModelConstants;

    fn sign_weight() -> PiecewiseWeight {
        let k = ModelConstants::canonical();
        PiecewiseWeight::sign_step(k.f, k.beta).unwrap()
    }

    #[test]
    fn reciprocal_examples() {
        let k = ModelConstants::canonical();
        let c = 3f64.powf(-0.75);
        let at_beta = fp_reciprocal(k.beta).unwrap();
        assert!((at_beta.value - c).abs() < 1e-12);
        assert_eq!(at_beta.error_estimate, 0.0);
        assert_eq!(at_beta.method, FpMethod::ClosedForm);
        assert_eq!(fp_reciprocal(1.0).unwrap().value, 0.0);
        assert!((fp_reciprocal(0.1).unwrap().value + std::f64::consts::LN_10).abs() < 1e-12);
    }

    #[test]
    fn reciprocal_agrees_with_tiny_epsilon_regularization() {
        let g = PiecewiseWeight::constant(0.1, 1.0).unwrap();
        let eps: f64 = 1e-8;
        let via_reg = regularize_fp(&g, eps).unwrap() + eps.ln();
        assert!((via_reg - fp_reciprocal(0.1).unwrap().value).abs() < 1e-12);
    }

    #[test]
    fn reciprocal_rejects_nonpositive() {
        assert!(matches!(fp_reciprocal(0.0), Err(Error::Domain(_))));
        assert!(matches!(fp_reciprocal(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn piecewise_sign_step_is_minus_one() {
        let fp = fp_piecewise(&sign_weight());
        assert!((fp.value + 1.0).abs() < 1e-12);
        assert_eq!(fp.error_estimate, 0.0);
    }

    #[test]
    fn piecewise_unit_weight_is_c() {
        let k = ModelConstants::canonical();
        let g = PiecewiseWeight::constant(k.beta, 1.0).unwrap();
        assert!((fp_piecewise(&g).value - 3f64.powf(-0.75)).abs() < 1e-12);
    }

    #[test]
    fn piecewise_breakpoint_at_upper() {
        let k = ModelConstants::canonical();
        let g = PiecewiseWeight::new(k.beta, vec![k.beta], vec![2.5, -7.0]).unwrap();
        assert!((fp_piecewise(&g).value - 2.5 * k.beta.ln()).abs() < 1e-12);
    }

    #[test]
    fn invalid_weights_rejected() {
        assert!(PiecewiseWeight::new(1.0, vec![0.5, 0.5], vec![1.0, 2.0, 3.0]).is_err());
        assert!(PiecewiseWeight::new(1.0, vec![0.0], vec![1.0, 2.0]).is_err());
        assert!(PiecewiseWeight::new(1.0, vec![1.5], vec![1.0, 2.0]).is_err());
        assert!(PiecewiseWeight::new(1.0, vec![0.5], vec![1.0]).is_err());
        assert!(PiecewiseWeight::new(0.0, vec![], vec![1.0]).is_err());
        assert!(PiecewiseWeight::new(1.0, vec![], vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn regularized_examples() {
        let k = ModelConstants::canonical();
        let unit = PiecewiseWeight::constant(k.beta, 1.0).unwrap();
        let i = regularize_fp(&unit, 1e-3).unwrap();
        assert!((i - (k.c + 3.0 * 10f64.ln())).abs() < 1e-12);
        assert!((i - 7.346).abs() < 1e-3);

        let s = regularize_fp(&sign_weight(), 1e-2).unwrap();
        assert!((s - (-1.0 - 1e-2f64.ln())).abs() < 1e-12);
        assert!((s - 3.605).abs() < 1e-3);

        assert_eq!(regularize_fp(&unit, k.beta).unwrap(), 0.0);
    }

    #[test]
    fn regularized_rejects_epsilon_at_breakpoint() {
        let k = ModelConstants::canonical();
        assert!(matches!(regularize_fp(&sign_weight(), k.f), Err(Error::Domain(_))));
        assert!(matches!(regularize_fp(&sign_weight(), 0.9), Err(Error::Domain(_))));
        assert!(matches!(regularize_fp(&sign_weight(), 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn eval_uses_sign_convention_at_step() {
        let k = ModelConstants::canonical();
        let g = sign_weight();
        assert_eq!(g.eval(k.f), 1.0);
        assert_eq!(g.eval(0.0), 1.0);
        assert_eq!(g.eval(k.beta), -1.0);
    }

    #[test]
    fn sign_step_beyond_upper_is_constant() {
        let g = PiecewiseWeight::sign_step(2.0, 1.5).unwrap();
        assert!(g.breakpoints().is_empty());
        assert_eq!(g.values(), &[1.0]);
    }

    #[test]
    fn smooth_examples() {
        let k = ModelConstants::canonical();
        let one = fp_smooth(|_| 1.0, k.beta, 1e-12).unwrap();
        assert!((one.value - k.c).abs() < 1e-12);
        assert_eq!(one.method, FpMethod::Subtraction);

        let linear = fp_smooth(|x| x, 1.0, 1e-12).unwrap();
        assert!((linear.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn smooth_exponential_matches_frozen_oracle() {
        // frozen from a composite Simpson oracle of (e^λ − 1)/λ on [0, 1] (see tests/fp_oracles.rs)
        const ORACLE: f64 = 1.317_902_151_454_404;
        let r = fp_smooth(f64::exp, 1.0, 1e-10).unwrap();
        assert!((r.value - ORACLE).abs() < 1e-10);
        assert!(r.error_estimate <= 1e-10);
    }

    #[test]
    fn smooth_agrees_with_piecewise_on_step() {
        let g = sign_weight();
        let tol = 1e-9;
        let r = fp_smooth_with_breakpoints(|x| g.eval(x), g.upper(), tol, g.breakpoints()).unwrap();
        assert!((r.value - fp_piecewise(&g).value).abs() <= tol);
    }

    #[test]
    fn smooth_reports_nonconvergence() {
        // bounded but wildly oscillating subtracted integrand sin(1/λ)
        let err = fp_smooth(|x| if x > 0.0 { x * (1.0 / x).sin() } else { 0.0 }, 1.0, 1e-14).unwrap_err();
        assert!(matches!(err, Error::Computation { .. }));
    }

    #[test]
    fn weight_json_roundtrip_and_validation() {
        let g = sign_weight();
        let json = serde_json::to_string(&g).unwrap();
        let back: PiecewiseWeight = serde_json::from_str(&json).unwrap();
        assert_eq!(back, g);
        let bad = r#"{"upper": 1.0, "breakpoints": [0.7, 0.2], "values": [1, 2, 3]}"#;
        assert!(serde_json::from_str::<PiecewiseWeight>(bad).is_err());
    }

    #[test]
    fn linear_combination_merges_breakpoints() {
        let g1 = PiecewiseWeight::new(2.0, vec![0.5], vec![1.0, 3.0]).unwrap();
        let g2 = PiecewiseWeight::new(2.0, vec![1.0, 2.0], vec![-1.0, 2.0, 9.0]).unwrap();
        let h = PiecewiseWeight::linear_combination(2.0, &g1, 1.0, &g2).unwrap();
        assert_eq!(h.breakpoints(), &[0.5, 1.0, 2.0]);
        assert_eq!(h.values(), &[1.0, 5.0, 8.0, 15.0]);
    }
}
