//! ε-regularized Monte-Carlo estimates of the model moments, and recovery of
//! their finite parts.
//!
//! Cutting every λ integral at `ε` makes each factor finite. For `ε` below the
//! first breakpoint (`f` for the signed weight) the cut integral is exactly
//! `Fp − g(0⁺)·ln ε`, so a product of four factors is exactly a quartic in
//! `ln ε` whose constant term is the finite part. The sweep estimates the
//! regularized value on a grid of `ε` and reads off the constant term of a
//! weighted polynomial fit.

mod fit;
mod sampling;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::constants::ModelConstants;
use crate::error::{Error, Result};
use crate::fp_quadrature::{FinitePartValue, FpMethod};
use crate::lhv_model::{sign_conv, HiddenSample, LhvModel, Observable, UnitVector3};
use sampling::{reduce, LogUniform, StreamTag};

pub use crate::lhv_model::FactorKind;
pub use sampling::{derive_seed, sample_lambda};

/// Strictly decreasing regularization parameters, all in `(0, f)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonGrid {
    values: Vec<f64>,
}

impl EpsilonGrid {
    pub fn new(values: Vec<f64>, constants: &ModelConstants) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("epsilon grid is empty"));
        }
        for &e in &values {
            if !(e > 0.0 && e < constants.f) {
                return Err(Error::domain(format!(
                    "epsilon {e} outside (0, f = {}); the regularized value is only polynomial below f",
                    constants.f
                )));
            }
        }
        if values.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::domain(format!("epsilon grid must be strictly decreasing: {values:?}")));
        }
        Ok(Self { values })
    }

    /// `count` logarithmically spaced values from `start` down to `end`.
    pub fn log_spaced(start: f64, end: f64, count: usize, constants: &ModelConstants) -> Result<Self> {
        if count < 2 || !(start > end && end > 0.0) {
            return Err(Error::domain(format!(
                "log grid needs start > end > 0 and count >= 2 (start = {start}, end = {end}, count = {count})"
            )));
        }
        let (ls, le) = (start.ln(), end.ln());
        let step = (le - ls) / (count - 1) as f64;
        let values = (0..count)
            .map(|i| match i {
                0 => start,
                i if i == count - 1 => end,
                i => (ls + step * i as f64).exp(),
            })
            .collect();
        Self::new(values, constants)
    }

    /// Eight points from `10⁻²` down to `10⁻⁶`.
    pub fn default_for(constants: &ModelConstants) -> Result<Self> {
        Self::log_spaced(1e-2, 1e-6, 8, constants)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A Monte-Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorEstimate {
    pub epsilon: f64,
    pub mean: f64,
    pub std_err: f64,
    pub n_samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFit {
    pub grid: EpsilonGrid,
    pub estimates: Vec<FactorEstimate>,
    pub degree: usize,
    pub finite_part: f64,
    pub finite_part_err: f64,
    /// Ascending polynomial coefficients in `x = ln ε`.
    pub coefficients: Vec<f64>,
}

impl SweepFit {
    pub fn as_finite_part(&self) -> FinitePartValue {
        FinitePartValue {
            value: self.finite_part,
            method: FpMethod::RegularizedExtrapolation,
            error_estimate: self.finite_part_err,
        }
    }

    /// Per-ε rows `epsilon,ln_epsilon,estimate,std_err`, followed by a
    /// `finite_part,finite_part_err,degree` summary block.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let io = |e: csv::Error| Error::Computation {
            message: format!("csv output failed: {e}"),
            best_estimate: f64::NAN,
            error_estimate: f64::NAN,
        };
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
        w.write_record(["epsilon", "ln_epsilon", "estimate", "std_err"]).map_err(io)?;
        for e in &self.estimates {
            w.write_record([
                e.epsilon.to_string(),
                e.epsilon.ln().to_string(),
                e.mean.to_string(),
                e.std_err.to_string(),
            ])
            .map_err(io)?;
        }
        w.write_record(["finite_part", "finite_part_err", "degree"]).map_err(io)?;
        w.write_record([self.finite_part.to_string(), self.finite_part_err.to_string(), self.degree.to_string()])
            .map_err(io)?;
        w.flush().map_err(|e| io(e.into()))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// Full nine-variable sampling.
    Joint,
    /// Independent λ-factor estimates times the analytic n/η/χ coefficient.
    Factorized,
}

impl fmt::Display for SweepMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Joint => "joint",
            Self::Factorized => "factorized",
        })
    }
}

impl FromStr for SweepMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "joint" => Ok(Self::Joint),
            "factorized" => Ok(Self::Factorized),
            other => Err(Error::domain(format!("unknown sweep mode {other:?}"))),
        }
    }
}

// Stream purposes; kept distinct so no two estimates share random numbers.
const PURPOSE_PLAIN: u64 = 1;
const PURPOSE_SIGNED: u64 = 2;
const PURPOSE_JOINT: u64 = 3;

fn purpose(kind: FactorKind) -> u64 {
    match kind {
        FactorKind::Plain => PURPOSE_PLAIN,
        FactorKind::SignedStep => PURPOSE_SIGNED,
    }
}

fn check_epsilon(epsilon: f64, constants: &ModelConstants) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < constants.f) {
        return Err(Error::domain(format!("epsilon must lie in (0, f = {}), got {epsilon}", constants.f)));
    }
    Ok(())
}

fn check_samples(n_samples: usize) -> Result<()> {
    if n_samples == 0 {
        return Err(Error::domain("n_samples must be positive"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEngine {
    pub model: LhvModel,
}

impl Default for McEngine {
    fn default() -> Self {
        Self::new(LhvModel::default())
    }
}

impl McEngine {
    pub fn new(model: LhvModel) -> Self {
        Self { model }
    }

    fn constants(&self) -> &ModelConstants {
        &self.model.constants
    }

    /// Estimate `∫_ε^β g(λ)/λ dλ` with `g ≡ 1` or `g = sign(f − λ)`.
    pub fn estimate_factor(
        &self,
        kind: FactorKind,
        epsilon: f64,
        n_samples: usize,
        seed: u64,
    ) -> Result<FactorEstimate> {
        self.estimate_factor_tagged(kind, epsilon, n_samples, seed, 0, 0)
    }

    fn estimate_factor_tagged(
        &self,
        kind: FactorKind,
        epsilon: f64,
        n_samples: usize,
        seed: u64,
        point: u64,
        slot: u64,
    ) -> Result<FactorEstimate> {
        check_epsilon(epsilon, self.constants())?;
        check_samples(n_samples)?;
        let proposal = LogUniform::new(epsilon, self.constants().beta);
        let f = self.constants().f;
        let tag = StreamTag { purpose: purpose(kind), point, slot };
        let m = reduce(n_samples, seed, tag, |rng| {
            let (lambda, weight) = proposal.draw(rng);
            match kind {
                FactorKind::Plain => weight,
                FactorKind::SignedStep => weight * sign_conv(f - lambda),
            }
        });
        Ok(FactorEstimate { epsilon, mean: m.mean, std_err: m.std_err(), n_samples, seed })
    }

    /// Full nine-variable estimate of an ε-regularized moment.
    ///
    /// `n` uniform on `{1,2,3}³`, λ log-uniform on `[ε, β]`, `χ ~ N(0, 1)`,
    /// `η` uniform on `[−1, 1]²`. Each sample carries the weight `27·ln(β/ε)⁴`
    /// (three n-sums, four λ importance ratios, η volume 4, global ¼).
    pub fn estimate_moment_joint(
        &self,
        a: &UnitVector3,
        b: &UnitVector3,
        which: Observable,
        epsilon: f64,
        n_samples: usize,
        seed: u64,
    ) -> Result<FactorEstimate> {
        self.estimate_moment_joint_tagged(a, b, which, epsilon, n_samples, seed, 0)
    }

    #[allow(clippy::too_many_arguments)]
    fn estimate_moment_joint_tagged(
        &self,
        a: &UnitVector3,
        b: &UnitVector3,
        which: Observable,
        epsilon: f64,
        n_samples: usize,
        seed: u64,
        point: u64,
    ) -> Result<FactorEstimate> {
        check_epsilon(epsilon, self.constants())?;
        check_samples(n_samples)?;
        let proposal = LogUniform::new(epsilon, self.constants().beta);
        let weight = 27.0 * proposal.log_width.powi(4) * 4.0 * 0.25;
        let model = &self.model;
        let tag = StreamTag { purpose: PURPOSE_JOINT, point, slot: 0 };
        let m = reduce(n_samples, seed, tag, |rng| {
            let n = [rng.random_range(1..=3u8), rng.random_range(1..=3u8), rng.random_range(1..=3u8)];
            let lambda = [0; 4].map(|_| proposal.draw(rng).0);
            let chi: f64 = rng.sample(StandardNormal);
            let eta = [rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)];
            let s = HiddenSample { n, lambda, chi, eta };
            weight * model.observable(which, a, b, &s)
        });
        Ok(FactorEstimate { epsilon, mean: m.mean, std_err: m.std_err(), n_samples, seed })
    }

    /// Fit the estimates with a degree-`degree` polynomial in `ln ε` and return
    /// its value at `ln ε = 0`.
    pub fn extract_finite_part(&self, estimates: &[FactorEstimate], degree: usize) -> Result<SweepFit> {
        extract_finite_part(estimates, degree, self.constants())
    }

    /// Regularized sweep of a single λ factor, fitted with a straight line.
    pub fn run_factor_sweep(
        &self,
        kind: FactorKind,
        grid: &EpsilonGrid,
        n_samples: usize,
        seed: u64,
    ) -> Result<SweepFit> {
        let estimates = grid
            .values()
            .iter()
            .enumerate()
            .map(|(i, &e)| self.estimate_factor_tagged(kind, e, n_samples, seed, i as u64, 0))
            .collect::<Result<Vec<_>>>()?;
        self.extract_finite_part(&estimates, 1)
    }

    /// Regularized sweep of a moment and its degree-4 finite-part fit.
    ///
    /// Factorized mode estimates each of the four λ factors on its own stream
    /// and multiplies them with the analytic n/η/χ coefficient; the variance of
    /// the product of independent means is `Π(μ² + σ²) − Πμ²`. Joint mode uses
    /// [`McEngine::estimate_moment_joint`].
    #[allow(clippy::too_many_arguments)]
    pub fn run_sweep(
        &self,
        a: &UnitVector3,
        b: &UnitVector3,
        which: Observable,
        grid: &EpsilonGrid,
        n_samples: usize,
        seed: u64,
        mode: SweepMode,
    ) -> Result<SweepFit> {
        check_samples(n_samples)?;
        let estimates = match mode {
            SweepMode::Joint => grid
                .values()
                .iter()
                .enumerate()
                .map(|(i, &e)| self.estimate_moment_joint_tagged(a, b, which, e, n_samples, seed, i as u64))
                .collect::<Result<Vec<_>>>()?,
            SweepMode::Factorized => {
                let coefficient = self.model.moment_coefficient(which, a, b)?;
                let kinds = LhvModel::lambda_kinds(which);
                grid.values()
                    .iter()
                    .enumerate()
                    .map(|(i, &e)| {
                        if coefficient == 0.0 {
                            check_epsilon(e, self.constants())?;
                            return Ok(FactorEstimate { epsilon: e, mean: 0.0, std_err: 0.0, n_samples, seed });
                        }
                        let factors = kinds
                            .iter()
                            .enumerate()
                            .map(|(slot, &k)| self.estimate_factor_tagged(k, e, n_samples, seed, i as u64, slot as u64))
                            .collect::<Result<Vec<_>>>()?;
                        let mean: f64 = factors.iter().map(|f| f.mean).product();
                        Ok(FactorEstimate {
                            epsilon: e,
                            mean: coefficient * mean,
                            std_err: coefficient.abs() * product_std_err(&factors),
                            n_samples,
                            seed,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?
            }
        };
        self.extract_finite_part(&estimates, 4)
    }
}

/// Standard error of a product of independent means, `√(Π(μ² + σ²) − Πμ²)`.
///
/// Written as `|Πμ|·√(expm1(Σ ln1p(σ²/μ²)))` when no mean vanishes, which
/// avoids cancelling two nearly equal products.
fn product_std_err(factors: &[FactorEstimate]) -> f64 {
    if factors.iter().all(|f| f.mean != 0.0) {
        let rel: f64 = factors.iter().map(|f| (f.std_err / f.mean).powi(2).ln_1p()).sum();
        let mean: f64 = factors.iter().map(|f| f.mean).product();
        return mean.abs() * rel.exp_m1().sqrt();
    }
    let mean: f64 = factors.iter().map(|f| f.mean).product();
    let second: f64 = factors.iter().map(|f| f.mean * f.mean + f.std_err * f.std_err).product();
    (second - mean * mean).max(0.0).sqrt()
}

/// Weighted least-squares fit in `x = ln ε` (centred abscissae, inverse-variance
/// weights) evaluated at `x = 0`, with the propagated standard error.
pub fn extract_finite_part(
    estimates: &[FactorEstimate],
    degree: usize,
    constants: &ModelConstants,
) -> Result<SweepFit> {
    if estimates.len() < degree + 1 {
        return Err(Error::domain(format!(
            "degree {degree} needs at least {} epsilon points, got {}",
            degree + 1,
            estimates.len()
        )));
    }
    let mut eps: Vec<f64> = estimates.iter().map(|e| e.epsilon).collect();
    for &e in &eps {
        check_epsilon(e, constants)?;
    }
    let xs: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = estimates.iter().map(|e| e.mean).collect();
    let sigmas: Vec<f64> = estimates.iter().map(|e| e.std_err).collect();

    eps.sort_by(|a, b| b.total_cmp(a));
    if eps.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::domain("epsilon values must be distinct"));
    }
    let fit = fit::fit_at_zero(&xs, &ys, &sigmas, degree)?;
    let mut sorted = estimates.to_vec();
    sorted.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon));
    Ok(SweepFit {
        grid: EpsilonGrid::new(eps, constants)?,
        estimates: sorted,
        degree,
        finite_part: fit.at_zero,
        finite_part_err: fit.at_zero_err,
        coefficients: fit.coefficients,
    })
}
