//! CHSH evaluation for the quantum correlation and for the model, the
//! maximal-violation search, and the absolute-value bound check.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fp_quadrature::{fp_piecewise, fp_reciprocal};
use crate::lhv_model::{LhvModel, Observable, UnitVector3};
use crate::mc_engine::{derive_seed, EpsilonGrid, McEngine, SweepMode};

pub const CLASSICAL_BOUND: f64 = 2.0;
pub const TSIRELSON_BOUND: f64 = 2.0 * std::f64::consts::SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshSettings {
    pub a: UnitVector3,
    pub b: UnitVector3,
    pub c: UnitVector3,
    pub d: UnitVector3,
}

impl ChshSettings {
    /// Coplanar settings at the given angles (degrees, x–z plane).
    pub fn from_plane_angles(angles: [f64; 4]) -> Self {
        let [a, b, c, d] = angles.map(UnitVector3::from_plane_angle);
        Self { a, b, c, d }
    }

    /// `a = 0°, b = 45°, c = 90°, d = 135°`.
    pub fn tsirelson() -> Self {
        Self::from_plane_angles([0.0, 45.0, 90.0, 135.0])
    }
}

/// Parameters of the Monte-Carlo correlation source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub grid: EpsilonGrid,
    pub n_samples: usize,
    pub seed: u64,
    pub mode: SweepMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum CorrelationSource {
    /// `P(a, b) = −a·b`
    Quantum,
    /// Closed-form model correlation.
    ModelAnalytic,
    /// Finite part of a regularized Monte-Carlo sweep.
    ModelMc(McConfig),
}

impl CorrelationSource {
    fn is_deterministic(&self) -> bool {
        !matches!(self, Self::ModelMc(_))
    }
}

pub fn correlation(model: &LhvModel, source: &CorrelationSource, a: &UnitVector3, b: &UnitVector3) -> Result<f64> {
    match source {
        CorrelationSource::Quantum => Ok(-a.dot(b)),
        CorrelationSource::ModelAnalytic => model.moment(Observable::AB, a, b),
        CorrelationSource::ModelMc(cfg) => {
            let fit =
                McEngine::new(*model).run_sweep(a, b, Observable::AB, &cfg.grid, cfg.n_samples, cfg.seed, cfg.mode)?;
            Ok(fit.finite_part)
        }
    }
}

/// The four correlations entering the CHSH combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairCorrelations {
    pub ab: f64,
    pub ad: f64,
    pub cb: f64,
    pub cd: f64,
}

impl PairCorrelations {
    /// `|P(a,b) − P(a,d)| + |P(c,b) + P(c,d)|`
    pub fn chsh(&self) -> f64 {
        (self.ab - self.ad).abs() + (self.cb + self.cd).abs()
    }
}

/// The four correlations. Monte-Carlo pairs each get their own derived seed.
pub fn pair_correlations(
    model: &LhvModel,
    settings: &ChshSettings,
    source: &CorrelationSource,
) -> Result<PairCorrelations> {
    let p = |index: u64, x, y| match source {
        CorrelationSource::ModelMc(cfg) => {
            let cfg = McConfig { seed: derive_seed(cfg.seed, index), ..cfg.clone() };
            correlation(model, &CorrelationSource::ModelMc(cfg), x, y)
        }
        _ => correlation(model, source, x, y),
    };
    Ok(PairCorrelations {
        ab: p(0, &settings.a, &settings.b)?,
        ad: p(1, &settings.a, &settings.d)?,
        cb: p(2, &settings.c, &settings.b)?,
        cd: p(3, &settings.c, &settings.d)?,
    })
}

pub fn chsh_value(model: &LhvModel, settings: &ChshSettings, source: &CorrelationSource) -> Result<f64> {
    Ok(pair_correlations(model, settings, source)?.chsh())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViolationSearch {
    /// Plane angles `(a, b, c, d)` in degrees.
    pub angles: [f64; 4],
    pub settings: ChshSettings,
    pub s_max: f64,
    /// Best value on the grid before refinement.
    pub grid_max: f64,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    s: f64,
    angles: [f64; 4],
}

// S rounded to 1e-12 so that rounding noise does not decide between
// equivalent settings; still a total order, so the parallel reduction is exact.
fn rank(s: f64) -> f64 {
    (s * 1e12).round()
}

impl Candidate {
    // larger S wins; ties go to the lexicographically smaller angle tuple
    fn better(self, other: Self) -> Self {
        match rank(self.s).total_cmp(&rank(other.s)) {
            Ordering::Greater => self,
            Ordering::Less => other,
            Ordering::Equal => {
                let ord = self
                    .angles
                    .iter()
                    .zip(other.angles.iter())
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| *o != Ordering::Equal)
                    .unwrap_or(Ordering::Equal);
                if ord == Ordering::Greater {
                    other
                } else {
                    self
                }
            }
        }
    }
}

/// Grid search over coplanar settings followed by coordinate refinement.
///
/// Angles run over `[0°, 360°)` with spacing at most `resolution` degrees. The
/// correlation is tabulated once on the grid; for each `(b, d)` the best `a`
/// and `c` are chosen independently, since they enter separate terms. The
/// refinement only accepts improvements, so `s_max ≥ grid_max`.
pub fn max_violation_search(model: &LhvModel, source: &CorrelationSource, resolution: f64) -> Result<ViolationSearch> {
    if !source.is_deterministic() {
        return Err(Error::domain("maximal-violation search needs a deterministic correlation source"));
    }
    if !(resolution > 0.0 && resolution <= 360.0) {
        return Err(Error::domain(format!("resolution must be in (0, 360] degrees, got {resolution}")));
    }
    let m = (360.0 / resolution - 1e-9).ceil().max(1.0) as usize;
    let step = 360.0 / m as f64;
    let angle = |i: usize| i as f64 * step;
    let dirs: Vec<UnitVector3> = (0..m).map(|i| UnitVector3::from_plane_angle(angle(i))).collect();

    let table: Vec<f64> = (0..m * m)
        .into_par_iter()
        .map(|ij| correlation(model, source, &dirs[ij / m], &dirs[ij % m]))
        .collect::<Result<_>>()?;
    let p = |i: usize, j: usize| table[i * m + j];

    let best = (0..m)
        .into_par_iter()
        .map(|jb| {
            let mut local: Option<Candidate> = None;
            for jd in 0..m {
                let (mut ia, mut first) = (0, f64::NEG_INFINITY);
                let (mut ic, mut second) = (0, f64::NEG_INFINITY);
                for i in 0..m {
                    let t1 = (p(i, jb) - p(i, jd)).abs();
                    if rank(t1) > rank(first) {
                        first = t1;
                        ia = i;
                    }
                    let t2 = (p(i, jb) + p(i, jd)).abs();
                    if rank(t2) > rank(second) {
                        second = t2;
                        ic = i;
                    }
                }
                let cand = Candidate { s: first + second, angles: [angle(ia), angle(jb), angle(ic), angle(jd)] };
                local = Some(match local {
                    Some(l) => l.better(cand),
                    None => cand,
                });
            }
            local.expect("grid has at least one point")
        })
        .reduce_with(Candidate::better)
        .expect("grid has at least one point");

    let s_of = |angles: [f64; 4]| chsh_value(model, &ChshSettings::from_plane_angles(angles), source);
    // re-evaluate at the grid point so refinement starts from a consistent value
    let mut current = Candidate { s: s_of(best.angles)?.max(best.s), angles: best.angles };
    let grid_max = current.s;
    let mut h = step / 2.0;
    while h > 1e-9 {
        let mut improved = false;
        for k in 0..4 {
            for dir in [1.0, -1.0] {
                let mut trial = current.angles;
                trial[k] += dir * h;
                let s = s_of(trial)?;
                if s > current.s {
                    current = Candidate { s, angles: trial };
                    improved = true;
                }
            }
        }
        if !improved {
            h /= 2.0;
        }
    }

    Ok(ViolationSearch {
        angles: current.angles,
        settings: ChshSettings::from_plane_angles(current.angles),
        s_max: current.s,
        grid_max,
    })
}

/// The absolute-value bound applied to the signed finite part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParadoxReport {
    /// `|Fp ∫₀^β sign(f − λ)/λ dλ|`
    #[serde(rename = "lhs")]
    pub lhs_abs_finite_part: f64,
    /// `Fp ∫₀^β dλ/λ`
    #[serde(rename = "rhs")]
    pub rhs_bound: f64,
    pub contradiction: bool,
    pub interpretation: String,
}

/// Compare `|Fp ∫ sign(f−λ)/λ|` with `Fp ∫ |sign(f−λ)|/λ = Fp ∫ 1/λ`.
///
/// For a nonnegative density the second always dominates the first. Here it
/// does not, because the pseudo-function is not a nonnegative measure.
pub fn paradox_report(model: &LhvModel) -> Result<ParadoxReport> {
    let lhs = fp_piecewise(&model.sign_weight()).value.abs();
    let rhs = fp_reciprocal(model.constants.beta)?.value;
    let contradiction = lhs > rhs;
    let interpretation = if contradiction {
        format!(
            "|Fp integral of sign(f - lambda)/lambda| = {lhs} exceeds Fp integral of 1/lambda = {rhs}: \
             the step |integral rho*g| <= integral rho*|g| used when deriving Bell-type bounds \
             does not hold for this pseudo-functional density"
        )
    } else {
        format!(
            "|Fp integral of sign(f - lambda)/lambda| = {lhs} does not exceed Fp integral of 1/lambda = {rhs}: \
             the absolute-value bound holds for these constants"
        )
    };
    Ok(ParadoxReport { lhs_abs_finite_part: lhs, rhs_bound: rhs, contradiction, interpretation })
}

/// Everything an audit run reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChshAudit {
    pub settings: ChshSettings,
    pub source: CorrelationSource,
    pub correlations: PairCorrelations,
    pub s: f64,
    pub classical_bound: f64,
    pub tsirelson_bound: f64,
    pub exceeds_classical: bool,
    pub within_tsirelson: bool,
    pub paradox: ParadoxReport,
}

pub fn audit(model: &LhvModel, settings: &ChshSettings, source: &CorrelationSource) -> Result<ChshAudit> {
    let correlations = pair_correlations(model, settings, source)?;
    let s = correlations.chsh();
    Ok(ChshAudit {
        settings: *settings,
        source: source.clone(),
        correlations,
        s,
        classical_bound: CLASSICAL_BOUND,
        tsirelson_bound: TSIRELSON_BOUND,
        exceeds_classical: s > CLASSICAL_BOUND,
        within_tsirelson: s <= TSIRELSON_BOUND + 1e-9,
        paradox: paradox_report(model)?,
    })
}
