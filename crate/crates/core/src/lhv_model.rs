//! The hidden-variable model: sample space, detector functions and the
//! factorized closed-form moments.
//!
//! Hidden variables are `n₁, n₂, n₃ ∈ {1,2,3}`, `λ₁..λ₄ ∈ [−β, β]`, `χ ∈ ℝ` and
//! `η₁, η₂ ∈ [−1, 1]`. The density is
//! `ρ = ¼ · Πτ Pf θ(λτ)/λτ · φ(χ)` with `φ` the standard normal density, and
//!
//! ```text
//! A =  sign(χ)·sign{δ(n₁,n₂)·a[n₂]·sign(f−λ₁)·sign(f−λ₂) − η₁}
//! B = −sign(χ)·sign{δ(n₁,n₃)·b[n₃]·sign(f−λ₃)·sign(f−λ₄) − η₂}
//! ```
//!
//! Every moment factorizes into n-sums, η integrals, four λ finite parts and a
//! Gaussian χ moment; [`LhvModel::moment`] assembles them in that order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::constants::ModelConstants;
use crate::error::{Error, Result};
use crate::fp_quadrature::{fp_piecewise, regularize_fp, PiecewiseWeight};

/// Tolerance on `|v|² − 1` for a vector to count as a unit vector.
pub const UNIT_TOLERANCE: f64 = 1e-9;

// Length of the η range [−1, 1].
const ETA_VOLUME: f64 = 2.0;

/// `+1` for `x ≥ 0`, `−1` otherwise.
#[inline]
pub fn sign_conv(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Heaviside step with `θ(0) = ½`.
#[inline]
pub fn theta(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x == 0.0 {
        0.5
    } else {
        0.0
    }
}

/// `∫₋₁¹ sign(u − η) dη = 2u` for `|u| ≤ 1`.
pub fn eta_mean(u: f64) -> Result<f64> {
    if u.is_nan() || u.abs() > 1.0 {
        return Err(Error::domain(format!("eta_mean needs |u| <= 1, got {u}")));
    }
    Ok(2.0 * u)
}

/// `(1/√2π) ∫ e^{−χ²/2} sign(χ)^p dχ` for `p ∈ {1, 2}`.
pub fn gaussian_sign_moment(p: u32) -> Result<f64> {
    match p {
        // odd integrand
        1 => Ok(0.0),
        // sign² = 1 and the Gaussian is normalized
        2 => Ok(1.0),
        _ => Err(Error::domain(format!("gaussian_sign_moment defined for p in {{1, 2}}, got {p}"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 3]", try_from = "[f64; 3]")]
pub struct UnitVector3([f64; 3]);

impl UnitVector3 {
    /// Accepts the components as given; fails unless `|v|² = 1` within [`UNIT_TOLERANCE`].
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let v = Self([x, y, z]);
        let norm2 = v.norm_squared();
        if norm2.is_nan() || (norm2 - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::domain(format!("({x}, {y}, {z}) is not a unit vector (|v|² = {norm2})")));
        }
        Ok(v)
    }

    /// Rescales a nonzero finite vector to unit length.
    pub fn normalized(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::domain(format!("cannot normalize ({x}, {y}, {z})")));
        }
        Ok(Self([x / norm, y / norm, z / norm]))
    }

    /// Unit vector at `degrees` from the z axis towards the x axis, in the x–z plane.
    pub fn from_plane_angle(degrees: f64) -> Self {
        let (s, c) = degrees.to_radians().sin_cos();
        Self([s, 0.0, c])
    }

    pub fn x() -> Self {
        Self([1.0, 0.0, 0.0])
    }

    pub fn y() -> Self {
        Self([0.0, 1.0, 0.0])
    }

    pub fn z() -> Self {
        Self([0.0, 0.0, 1.0])
    }

    pub fn components(&self) -> [f64; 3] {
        self.0
    }

    /// Component with 1-based index `n ∈ {1, 2, 3}`.
    pub fn component(&self, n: u8) -> f64 {
        self.0[usize::from(n) - 1]
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    fn norm_squared(&self) -> f64 {
        self.dot(self)
    }
}

impl From<UnitVector3> for [f64; 3] {
    fn from(v: UnitVector3) -> Self {
        v.0
    }
}

impl TryFrom<[f64; 3]> for UnitVector3 {
    type Error = Error;

    fn try_from(c: [f64; 3]) -> Result<Self> {
        Self::new(c[0], c[1], c[2])
    }
}

/// One assignment of the nine hidden variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HiddenSample {
    pub n: [u8; 3],
    pub lambda: [f64; 4],
    pub chi: f64,
    pub eta: [f64; 2],
}

impl HiddenSample {
    pub fn new(constants: &ModelConstants, n: [u8; 3], lambda: [f64; 4], chi: f64, eta: [f64; 2]) -> Result<Self> {
        let s = Self { n, lambda, chi, eta };
        if s.is_valid(constants) {
            Ok(s)
        } else {
            Err(Error::domain(format!("hidden sample outside the model ranges: {s:?}")))
        }
    }

    /// Every coordinate inside its range: `n ∈ {1,2,3}`, `|λ| ≤ β`, `χ` finite, `|η| ≤ 1`.
    pub fn is_valid(&self, constants: &ModelConstants) -> bool {
        self.n.iter().all(|n| (1..=3).contains(n))
            && self.lambda.iter().all(|l| l.abs() <= constants.beta)
            && self.chi.is_finite()
            && self.eta.iter().all(|e| e.abs() <= 1.0)
    }
}

/// Which expectation value to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Observable {
    #[serde(rename = "norm")]
    Norm,
    A,
    B,
    A2,
    B2,
    AB,
}

impl Observable {
    pub const ALL: [Observable; 6] = [Self::Norm, Self::A, Self::B, Self::A2, Self::B2, Self::AB];
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Norm => "norm",
            Self::A => "A",
            Self::B => "B",
            Self::A2 => "A2",
            Self::B2 => "B2",
            Self::AB => "AB",
        };
        f.write_str(s)
    }
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "norm" | "1" => Ok(Self::Norm),
            "A" => Ok(Self::A),
            "B" => Ok(Self::B),
            "A2" => Ok(Self::A2),
            "B2" => Ok(Self::B2),
            "AB" => Ok(Self::AB),
            other => Err(Error::domain(format!("unknown observable {other:?} (expected norm, A, B, A2, B2 or AB)"))),
        }
    }
}

/// The two weights a λ finite part can carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorKind {
    /// `g ≡ 1`
    Plain,
    /// `g(λ) = sign(f − λ)`
    SignedStep,
}

/// The six expectation values `⟨ρ⟩, ⟨ρA⟩, ⟨ρB⟩, ⟨ρA²⟩, ⟨ρB²⟩, ⟨ρAB⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub norm: f64,
    #[serde(rename = "mean_A")]
    pub mean_a: f64,
    #[serde(rename = "mean_B")]
    pub mean_b: f64,
    #[serde(rename = "mean_A2")]
    pub mean_a2: f64,
    #[serde(rename = "mean_B2")]
    pub mean_b2: f64,
    #[serde(rename = "corr_AB")]
    pub corr_ab: f64,
}

impl MomentReport {
    pub fn get(&self, which: Observable) -> f64 {
        match which {
            Observable::Norm => self.norm,
            Observable::A => self.mean_a,
            Observable::B => self.mean_b,
            Observable::A2 => self.mean_a2,
            Observable::B2 => self.mean_b2,
            Observable::AB => self.corr_ab,
        }
    }
}

// What the η integral over one of the two slots reduces to.
#[derive(Clone, Copy)]
enum EtaSlot<'a> {
    // sign{…}² = 1: plain volume, and the paired λ factors carry g ≡ 1
    Volume,
    // sign{δ·v[n]·s·s − η}: eta_mean of the Kronecker-masked component, λ factors signed
    Mean { setting: &'a UnitVector3, partner: usize },
}

struct Structure<'a> {
    prefactor: f64,
    chi_power: u32,
    slots: [EtaSlot<'a>; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LhvModel {
    pub constants: ModelConstants,
}

impl Default for LhvModel {
    fn default() -> Self {
        Self::new(ModelConstants::canonical())
    }
}

impl LhvModel {
    pub fn new(constants: ModelConstants) -> Self {
        Self { constants }
    }

    pub fn unit_weight(&self) -> PiecewiseWeight {
        PiecewiseWeight::constant(self.constants.beta, 1.0).expect("beta > 0 is checked on construction")
    }

    pub fn sign_weight(&self) -> PiecewiseWeight {
        PiecewiseWeight::sign_step(self.constants.f, self.constants.beta)
            .expect("f, beta > 0 is checked on construction")
    }

    pub fn weight(&self, kind: FactorKind) -> PiecewiseWeight {
        match kind {
            FactorKind::Plain => self.unit_weight(),
            FactorKind::SignedStep => self.sign_weight(),
        }
    }

    /// Detector at side A. Always ±1.
    pub fn detector_a(&self, a: &UnitVector3, s: &HiddenSample) -> f64 {
        let f = self.constants.f;
        let [n1, n2, _] = s.n;
        let delta = if n1 == n2 { 1.0 } else { 0.0 };
        let inner = delta * a.component(n2) * sign_conv(f - s.lambda[0]) * sign_conv(f - s.lambda[1]) - s.eta[0];
        sign_conv(s.chi) * sign_conv(inner)
    }

    /// Detector at side B. Always ±1.
    pub fn detector_b(&self, b: &UnitVector3, s: &HiddenSample) -> f64 {
        let f = self.constants.f;
        let [n1, _, n3] = s.n;
        let delta = if n1 == n3 { 1.0 } else { 0.0 };
        let inner = delta * b.component(n3) * sign_conv(f - s.lambda[2]) * sign_conv(f - s.lambda[3]) - s.eta[1];
        -sign_conv(s.chi) * sign_conv(inner)
    }

    /// Value of an observable at a sample (`1`, `A`, `B`, `A²`, `B²` or `AB`).
    pub fn observable(&self, which: Observable, a: &UnitVector3, b: &UnitVector3, s: &HiddenSample) -> f64 {
        match which {
            Observable::Norm => 1.0,
            Observable::A => self.detector_a(a, s),
            Observable::B => self.detector_b(b, s),
            Observable::A2 => self.detector_a(a, s).powi(2),
            Observable::B2 => self.detector_b(b, s).powi(2),
            Observable::AB => self.detector_a(a, s) * self.detector_b(b, s),
        }
    }

    /// ε-regularized density: `¼ · Πτ θ(λτ)/λτ · 1[λτ ≥ ε] · φ(χ)` on valid samples, else 0.
    pub fn regularized_density(&self, s: &HiddenSample, epsilon: f64) -> f64 {
        if !s.is_valid(&self.constants) {
            return 0.0;
        }
        let lambda_part: f64 =
            s.lambda.iter().map(|&l| if l >= epsilon && l > 0.0 { theta(l) / l } else { 0.0 }).product();
        let gauss = (-0.5 * s.chi * s.chi).exp() / (2.0 * std::f64::consts::PI).sqrt();
        0.25 * lambda_part * gauss
    }

    fn structure<'a>(which: Observable, a: &'a UnitVector3, b: &'a UnitVector3) -> Structure<'a> {
        let side_a = EtaSlot::Mean { setting: a, partner: 1 };
        let side_b = EtaSlot::Mean { setting: b, partner: 2 };
        // `B` carries an overall minus sign. For ⟨ρ⟩ the χ integral is ∫φ = ∫φ·sign², i.e. p = 2.
        match which {
            Observable::Norm => Structure { prefactor: 0.25, chi_power: 2, slots: [EtaSlot::Volume; 2] },
            Observable::A => Structure { prefactor: 0.25, chi_power: 1, slots: [side_a, EtaSlot::Volume] },
            Observable::B => Structure { prefactor: -0.25, chi_power: 1, slots: [EtaSlot::Volume, side_b] },
            Observable::A2 | Observable::B2 => Structure { prefactor: 0.25, chi_power: 2, slots: [EtaSlot::Volume; 2] },
            Observable::AB => Structure { prefactor: -0.25, chi_power: 2, slots: [side_a, side_b] },
        }
    }

    /// Which weight each of `λ₁..λ₄` carries for this observable.
    pub fn lambda_kinds(which: Observable) -> [FactorKind; 4] {
        let pair = |slot: EtaSlot| match slot {
            EtaSlot::Volume => FactorKind::Plain,
            EtaSlot::Mean { .. } => FactorKind::SignedStep,
        };
        let z = UnitVector3::z();
        let s = Self::structure(which, &z, &z);
        let (first, second) = (pair(s.slots[0]), pair(s.slots[1]));
        [first, first, second, second]
    }

    /// Factorized evaluation with a caller-supplied λ integral per weight kind.
    ///
    /// Order: n-sums outermost, then η integrals, then the λ factors, then χ and
    /// the global ¼. Off-diagonal n terms vanish through `eta_mean(0) = 0`.
    pub fn assemble<L>(&self, which: Observable, a: &UnitVector3, b: &UnitVector3, lambda: L) -> Result<f64>
    where
        L: Fn(FactorKind) -> Result<f64>,
    {
        let s = Self::structure(which, a, b);
        let plain = lambda(FactorKind::Plain)?;
        let signed = lambda(FactorKind::SignedStep)?;

        let mut total = 0.0;
        for n1 in 1..=3u8 {
            for n2 in 1..=3u8 {
                for n3 in 1..=3u8 {
                    let n = [n1, n2, n3];
                    let mut term = 1.0;
                    for slot in s.slots {
                        match slot {
                            EtaSlot::Volume => term *= ETA_VOLUME * plain * plain,
                            EtaSlot::Mean { setting, partner } => {
                                let m = n[partner];
                                let masked = if n1 == m { setting.component(m) } else { 0.0 };
                                // eta_mean is odd, so the λ sign product factors out of it
                                let eta = eta_mean(masked)?;
                                if eta == 0.0 {
                                    term = 0.0;
                                    break;
                                }
                                term *= eta * signed * signed;
                            }
                        }
                    }
                    total += term;
                }
            }
        }
        let chi = gaussian_sign_moment(s.chi_power)?;
        // `+ 0.0` folds a negative zero into +0
        Ok(s.prefactor * total * chi + 0.0)
    }

    /// Closed-form finite-part value of one moment.
    pub fn moment(&self, which: Observable, a: &UnitVector3, b: &UnitVector3) -> Result<f64> {
        let plain = fp_piecewise(&self.unit_weight()).value;
        let signed = fp_piecewise(&self.sign_weight()).value;
        self.assemble(which, a, b, |k| {
            Ok(match k {
                FactorKind::Plain => plain,
                FactorKind::SignedStep => signed,
            })
        })
    }

    /// Closed form of the ε-regularized moment (λ integrals cut at `ε`).
    /// A degree-4 polynomial in `ln ε` for `ε < f`.
    pub fn moment_regularized(&self, which: Observable, a: &UnitVector3, b: &UnitVector3, epsilon: f64) -> Result<f64> {
        let plain = regularize_fp(&self.unit_weight(), epsilon)?;
        let signed = regularize_fp(&self.sign_weight(), epsilon)?;
        self.assemble(which, a, b, |k| {
            Ok(match k {
                FactorKind::Plain => plain,
                FactorKind::SignedStep => signed,
            })
        })
    }

    /// The ε-independent part of a moment with all λ factors set to 1.
    pub fn moment_coefficient(&self, which: Observable, a: &UnitVector3, b: &UnitVector3) -> Result<f64> {
        self.assemble(which, a, b, |_| Ok(1.0))
    }

    pub fn analytic_moments(&self, a: &UnitVector3, b: &UnitVector3) -> Result<MomentReport> {
        self.report(|w| self.moment(w, a, b))
    }

    pub fn regularized_moments(&self, a: &UnitVector3, b: &UnitVector3, epsilon: f64) -> Result<MomentReport> {
        self.report(|w| self.moment_regularized(w, a, b, epsilon))
    }

    fn report(&self, m: impl Fn(Observable) -> Result<f64>) -> Result<MomentReport> {
        Ok(MomentReport {
            norm: m(Observable::Norm)?,
            mean_a: m(Observable::A)?,
            mean_b: m(Observable::B)?,
            mean_a2: m(Observable::A2)?,
            mean_b2: m(Observable::B2)?,
            corr_ab: m(Observable::AB)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> LhvModel {
        LhvModel::default()
    }

    fn sample(n: [u8; 3], lambda: [f64; 4], chi: f64, eta: [f64; 2]) -> HiddenSample {
        HiddenSample::new(&ModelConstants::canonical(), n, lambda, chi, eta).unwrap()
    }

    #[test]
    fn sign_and_theta_conventions() {
        assert_eq!(sign_conv(0.0), 1.0);
        assert_eq!(sign_conv(-0.3), -1.0);
        let f = ModelConstants::canonical().f;
        assert_eq!(sign_conv(f - f), 1.0);
        assert_eq!(theta(1.0), 1.0);
        assert_eq!(theta(0.0), 0.5);
        assert_eq!(theta(-2.0), 0.0);
    }

    #[test]
    fn detector_a_examples() {
        let m = model();
        let z = UnitVector3::z();
        let s = sample([3, 3, 1], [0.0; 4], 1.0, [0.0, 0.0]);
        assert_eq!(m.detector_a(&z, &s), 1.0);
        let off = sample([1, 2, 1], [0.0; 4], 1.0, [0.5, 0.0]);
        assert_eq!(m.detector_a(&UnitVector3::x(), &off), -1.0);
        let flipped = HiddenSample { chi: -1.0, ..s };
        assert_eq!(m.detector_a(&z, &flipped), -1.0);
    }

    #[test]
    fn detector_b_examples() {
        let m = model();
        let z = UnitVector3::z();
        let s = sample([3, 1, 3], [0.0; 4], 1.0, [0.0, 0.0]);
        assert_eq!(m.detector_b(&z, &s), -1.0);
        let off = sample([1, 1, 2], [0.0; 4], 1.0, [0.0, 0.5]);
        assert_eq!(m.detector_b(&z, &off), 1.0);
        let flipped = HiddenSample { chi: -1.0, ..s };
        assert_eq!(m.detector_b(&z, &flipped), 1.0);
    }

    #[test]
    fn eta_mean_examples() {
        assert_eq!(eta_mean(0.0).unwrap(), 0.0);
        assert_eq!(eta_mean(1.0).unwrap(), 2.0);
        assert_eq!(eta_mean(-0.25).unwrap(), -0.5);
        assert!(eta_mean(1.01).is_err());
        assert!(eta_mean(f64::NAN).is_err());
    }

    #[test]
    fn gaussian_moments() {
        assert_eq!(gaussian_sign_moment(1).unwrap(), 0.0);
        assert_eq!(gaussian_sign_moment(2).unwrap(), 1.0);
        assert!(gaussian_sign_moment(0).is_err());
        assert!(gaussian_sign_moment(3).is_err());
    }

    #[test]
    fn analytic_examples() {
        let m = model();
        let z = UnitVector3::z();
        let r = m.analytic_moments(&z, &z).unwrap();
        assert!((r.corr_ab + 1.0).abs() < 1e-12);
        assert!((r.norm - 1.0).abs() < 1e-12);
        assert_eq!(r.mean_a, 0.0);
        assert_eq!(r.mean_b, 0.0);
        assert!((r.mean_a2 - 1.0).abs() < 1e-12);
        assert!((r.mean_b2 - 1.0).abs() < 1e-12);

        let r = m.analytic_moments(&UnitVector3::x(), &UnitVector3::y()).unwrap();
        assert!(r.corr_ab.abs() < 1e-12);

        let b = UnitVector3::new(0.0, 60f64.to_radians().sin(), 60f64.to_radians().cos()).unwrap();
        let r = m.analytic_moments(&z, &b).unwrap();
        assert!((r.corr_ab + 0.5).abs() < 1e-12);
    }

    #[test]
    fn overridden_c_scales_norm() {
        let m = LhvModel::new(ModelConstants::from_c(0.5));
        let r = m.analytic_moments(&UnitVector3::z(), &UnitVector3::z()).unwrap();
        assert!((r.norm - 1.6875).abs() < 1e-12);
    }

    #[test]
    fn lambda_kinds_per_observable() {
        use FactorKind::*;
        assert_eq!(LhvModel::lambda_kinds(Observable::Norm), [Plain; 4]);
        assert_eq!(LhvModel::lambda_kinds(Observable::AB), [SignedStep; 4]);
        assert_eq!(LhvModel::lambda_kinds(Observable::A), [SignedStep, SignedStep, Plain, Plain]);
        assert_eq!(LhvModel::lambda_kinds(Observable::B), [Plain, Plain, SignedStep, SignedStep]);
    }

    #[test]
    fn regularized_closed_forms() {
        let m = model();
        let z = UnitVector3::z();
        let eps: f64 = 1e-2;
        let ab = m.moment_regularized(Observable::AB, &z, &z, eps).unwrap();
        assert!((ab + (-1.0 - eps.ln()).powi(4)).abs() < 1e-9);
        assert!((ab + 168.93).abs() < 0.01);
        let norm = m.moment_regularized(Observable::Norm, &z, &z, eps).unwrap();
        assert!((norm - 27.0 * (m.constants.c - eps.ln()).powi(4)).abs() < 1e-9);
    }

    #[test]
    fn regularized_density_is_nonnegative_and_gated() {
        let m = model();
        let s = sample([1, 2, 3], [0.5, 0.1, -0.2, 1.0], 0.3, [0.1, -0.9]);
        assert_eq!(m.regularized_density(&s, 1e-3), 0.0); // negative λ kills θ
        let s = sample([1, 2, 3], [0.5, 0.1, 0.2, 1.0], 0.3, [0.1, -0.9]);
        assert!(m.regularized_density(&s, 1e-3) > 0.0);
        assert_eq!(m.regularized_density(&s, 0.15), 0.0);
        let outside = HiddenSample { lambda: [2.0, 0.1, 0.2, 1.0], ..s };
        assert_eq!(m.regularized_density(&outside, 1e-3), 0.0);
    }

    #[test]
    fn hidden_sample_validation() {
        let k = ModelConstants::canonical();
        assert!(HiddenSample::new(&k, [0, 1, 1], [0.0; 4], 0.0, [0.0; 2]).is_err());
        assert!(HiddenSample::new(&k, [1, 1, 4], [0.0; 4], 0.0, [0.0; 2]).is_err());
        assert!(HiddenSample::new(&k, [1, 1, 1], [k.beta, -k.beta, 0.0, 0.0], 0.0, [1.0, -1.0]).is_ok());
        assert!(HiddenSample::new(&k, [1, 1, 1], [2.0 * k.beta, 0.0, 0.0, 0.0], 0.0, [0.0; 2]).is_err());
        assert!(HiddenSample::new(&k, [1, 1, 1], [0.0; 4], f64::INFINITY, [0.0; 2]).is_err());
        assert!(HiddenSample::new(&k, [1, 1, 1], [0.0; 4], 0.0, [1.5, 0.0]).is_err());
    }

    #[test]
    fn unit_vector_checks() {
        assert!(UnitVector3::new(0.0, 0.0, 1.0 + 1e-12).is_ok());
        assert!(UnitVector3::new(0.0, 0.6, 0.6).is_err());
        let v = UnitVector3::normalized(0.0, 3.0, 4.0).unwrap();
        assert!((v.component(2) - 0.6).abs() < 1e-15);
        assert!(UnitVector3::normalized(0.0, 0.0, 0.0).is_err());
        let json = serde_json::to_string(&UnitVector3::z()).unwrap();
        assert_eq!(json, "[0.0,0.0,1.0]");
        assert!(serde_json::from_str::<UnitVector3>("[1.0,1.0,0.0]").is_err());
    }

    #[test]
    fn moment_report_json_field_names() {
        let r = model().analytic_moments(&UnitVector3::z(), &UnitVector3::x()).unwrap();
        let v: serde_json::Value = serde_json::to_value(r).unwrap();
        for key in ["norm", "mean_A", "mean_B", "mean_A2", "mean_B2", "corr_AB"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }
}
