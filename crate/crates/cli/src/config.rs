//! Argument parsers shared by the subcommands.

use anyhow::{bail, Context, Result};
use pfbell_core::lhv_model::UnitVector3;
use pfbell_core::mc_engine::EpsilonGrid;
use pfbell_core::ModelConstants;

/// Largest accepted `| |v| − 1 |` under `--strict`.
pub const STRICT_NORM_TOLERANCE: f64 = 1e-6;

fn floats(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"))).collect()
}

/// `"x,y,z"`, not yet normalized.
pub fn parse_triple(s: &str) -> std::result::Result<[f64; 3], String> {
    let v = floats(s)?;
    v.try_into().map_err(|v: Vec<f64>| format!("expected 3 comma-separated components, got {}", v.len()))
}

/// `"a,b,c,d"` in degrees.
pub fn parse_angles(s: &str) -> std::result::Result<[f64; 4], String> {
    let v = floats(s)?;
    v.try_into().map_err(|v: Vec<f64>| format!("expected 4 comma-separated angles, got {}", v.len()))
}

/// A comma-separated list kept as one argument value.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatList(pub Vec<f64>);

pub fn parse_list(s: &str) -> std::result::Result<FloatList, String> {
    floats(s).map(FloatList)
}

/// `start:end:count`, expanded logarithmically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

pub fn parse_grid(s: &str) -> std::result::Result<GridSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [start, end, count] = parts[..] else {
        return Err(format!("expected start:end:count, got {s:?}"));
    };
    Ok(GridSpec {
        start: start.parse().map_err(|e| format!("start {start:?}: {e}"))?,
        end: end.parse().map_err(|e| format!("end {end:?}: {e}"))?,
        count: count.parse().map_err(|e| format!("count {count:?}: {e}"))?,
    })
}

impl GridSpec {
    pub fn build(&self, constants: &ModelConstants) -> Result<EpsilonGrid> {
        Ok(EpsilonGrid::log_spaced(self.start, self.end, self.count, constants)?)
    }
}

/// `C=0.5[,f=..,beta=..]`. `C` alone rederives `β` and `f`; explicit `f` or
/// `beta` override them.
pub fn parse_constants(s: &str) -> Result<ModelConstants> {
    let (mut c, mut beta, mut f) = (None, None, None);
    for item in s.split(',') {
        let (key, value) =
            item.split_once('=').with_context(|| format!("constants entry {item:?} is not key=value"))?;
        let value: f64 = value.trim().parse().with_context(|| format!("constants entry {item:?}"))?;
        match key.trim() {
            "C" | "c" => c = Some(value),
            "beta" => beta = Some(value),
            "f" => f = Some(value),
            other => bail!("unknown constant {other:?} (expected C, beta or f)"),
        }
    }
    let base = c.map_or_else(ModelConstants::canonical, ModelConstants::from_c);
    Ok(ModelConstants::custom(base.c, beta.unwrap_or(base.beta), f.unwrap_or(base.f))?)
}

pub fn unit_vector(raw: [f64; 3], strict: bool) -> Result<UnitVector3> {
    let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
    if strict && (norm - 1.0).abs() > STRICT_NORM_TOLERANCE {
        bail!("vector {raw:?} has norm {norm}, outside 1 ± {STRICT_NORM_TOLERANCE}");
    }
    Ok(UnitVector3::normalized(raw[0], raw[1], raw[2])?)
}
