use anyhow::{bail, Result};
use pfbell_core::bell_audit::{self, ChshSettings, CorrelationSource, McConfig};
use pfbell_core::fp_quadrature::{fp_piecewise, fp_reciprocal, regularize_fp, PiecewiseWeight};
use pfbell_core::lhv_model::{FactorKind, LhvModel, Observable, UnitVector3};
use pfbell_core::mc_engine::{EpsilonGrid, McEngine, SweepFit, SweepMode};
use pfbell_core::prob_space::{self, Event};
use pfbell_core::ModelConstants;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{self, GridSpec};
use crate::{FactorArg, McArgs, PairArgs, SourceArg};

/// Tolerance of every `verify` check.
pub const VERIFY_TOLERANCE: f64 = 1e-12;

/// Invalid input; maps to exit code 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage(e: impl std::fmt::Display) -> anyhow::Error {
    Usage(e.to_string()).into()
}

pub fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    match e.downcast_ref::<pfbell_core::Error>() {
        Some(pfbell_core::Error::Domain(_)) => 2,
        _ => 1,
    }
}

pub struct Context {
    pub constants: ModelConstants,
    pub strict: bool,
}

impl Context {
    fn model(&self) -> LhvModel {
        LhvModel::new(self.constants)
    }

    fn vector(&self, raw: Option<[f64; 3]>, default: UnitVector3) -> Result<UnitVector3> {
        match raw {
            Some(v) => config::unit_vector(v, self.strict).map_err(usage),
            None => Ok(default),
        }
    }

    fn pair(&self, p: &PairArgs) -> Result<(UnitVector3, UnitVector3)> {
        Ok((self.vector(p.a, UnitVector3::z())?, self.vector(p.b, UnitVector3::from_plane_angle(45.0))?))
    }

    fn grid(&self, spec: Option<GridSpec>) -> Result<EpsilonGrid> {
        match spec {
            Some(g) => g.build(&self.constants),
            None => Ok(EpsilonGrid::default_for(&self.constants)?),
        }
    }
}

/// A command's report and whether its checks passed.
pub struct Outcome {
    pub json: Value,
    pub csv: String,
    pub passed: bool,
}

fn csv_rows<I, R>(header: &[&str], rows: I) -> Result<String>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub expected: f64,
    pub deviation: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, expected: f64) -> Self {
        let deviation = (value - expected).abs();
        Self { name: name.into(), value, expected, deviation, passed: deviation <= VERIFY_TOLERANCE }
    }
}

pub fn verify(ctx: &Context, pair: &PairArgs) -> Result<Outcome> {
    let k = ctx.constants;
    let model = ctx.model();
    let (a, b) = ctx.pair(pair)?;

    let mut checks = vec![
        Check::new("27*C^4", k.normalization(), 1.0),
        Check::new("ln(beta) - C", k.beta_log_residual(), 0.0),
        Check::new("2*ln(f) - ln(beta)", k.sign_log_combination(), -1.0),
        Check::new("Fp 1/lambda on (0, beta]", fp_reciprocal(k.beta)?.value, 3f64.powf(-0.75)),
        Check::new("Fp sign(f - lambda)/lambda on (0, beta]", fp_piecewise(&model.sign_weight()).value, -1.0),
    ];
    let m = model.analytic_moments(&a, &b)?;
    checks.extend([
        Check::new("<rho>", m.norm, 1.0),
        Check::new("<A>", m.mean_a, 0.0),
        Check::new("<B>", m.mean_b, 0.0),
        Check::new("<A^2>", m.mean_a2, 1.0),
        Check::new("<B^2>", m.mean_b2, 1.0),
        Check::new("<AB> + a.b", m.corr_ab, -a.dot(&b)),
    ]);
    let p_all = prob_space::probability(&model, &Event::Universal)?;
    let p_none = prob_space::probability(&model, &Event::Empty)?;
    checks.extend([
        Check::new("P[Xi]", p_all, 1.0),
        Check::new("P[empty]", p_none, 0.0),
        Check::new("P[Xi] + P[empty]", p_all + p_none, 1.0),
    ]);

    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    eprintln!("{:width$}  {:>24}  {:>20}  {:>10}  result", "check", "value", "expected", "deviation");
    for c in &checks {
        eprintln!(
            "{:width$}  {:>24.17e}  {:>20}  {:>10.3e}  {}",
            c.name,
            c.value,
            c.expected,
            c.deviation,
            if c.passed { "PASS" } else { "FAIL" }
        );
    }

    let passed = checks.iter().all(|c| c.passed);
    let csv = csv_rows(
        &["check", "value", "expected", "deviation", "passed"],
        checks.iter().map(|c| {
            [c.name.clone(), c.value.to_string(), c.expected.to_string(), c.deviation.to_string(), c.passed.to_string()]
        }),
    )?;
    let json = json!({
        "constants": k,
        "a": a,
        "b": b,
        "tolerance": VERIFY_TOLERANCE,
        "checks": checks,
    });
    Ok(Outcome { json, csv, passed })
}

fn factor_kind(f: FactorArg) -> FactorKind {
    match f {
        FactorArg::Plain => FactorKind::Plain,
        FactorArg::Signed => FactorKind::SignedStep,
    }
}

pub fn fp(
    ctx: &Context,
    factor: Option<FactorArg>,
    upper: Option<f64>,
    breakpoints: Option<Vec<f64>>,
    values: Option<Vec<f64>>,
    epsilon: Option<f64>,
) -> Result<Outcome> {
    let weight = match (factor, upper, values) {
        (Some(f), _, _) => ctx.model().weight(factor_kind(f)),
        (None, Some(u), Some(v)) => PiecewiseWeight::new(u, breakpoints.unwrap_or_default(), v)?,
        _ => bail!(Usage("give --factor, or --upper with --values".into())),
    };
    let fp = fp_piecewise(&weight);
    let regularized = epsilon.map(|e| regularize_fp(&weight, e).map(|v| (e, v))).transpose()?;

    let mut rows = vec![["finite_part".to_string(), fp.value.to_string()]];
    if let Some((e, v)) = regularized {
        rows.push(["epsilon".into(), e.to_string()]);
        rows.push(["regularized".into(), v.to_string()]);
    }
    let json = json!({
        "weight": weight,
        "finite_part": fp,
        "regularized": regularized.map(|(e, v)| json!({"epsilon": e, "value": v})),
    });
    Ok(Outcome { json, csv: csv_rows(&["quantity", "value"], rows)?, passed: true })
}

pub fn moments(ctx: &Context, pair: &PairArgs, epsilon: Option<f64>) -> Result<Outcome> {
    let model = ctx.model();
    let (a, b) = ctx.pair(pair)?;
    let analytic = model.analytic_moments(&a, &b)?;
    let regularized = epsilon.map(|e| model.regularized_moments(&a, &b, e)).transpose()?;

    let rows = Observable::ALL.iter().map(|&w| {
        [w.to_string(), analytic.get(w).to_string(), regularized.map_or(String::new(), |r| r.get(w).to_string())]
    });
    let csv = csv_rows(&["observable", "finite_part", "regularized"], rows)?;
    let json = json!({
        "a": a,
        "b": b,
        "analytic": analytic,
        "regularized": regularized.map(|r| json!({"epsilon": epsilon, "moments": r})),
    });
    Ok(Outcome { json, csv, passed: true })
}

pub struct SettingsInput {
    pub a: Option<[f64; 3]>,
    pub b: Option<[f64; 3]>,
    pub c: Option<[f64; 3]>,
    pub d: Option<[f64; 3]>,
    pub plane_angles: Option<[f64; 4]>,
}

impl SettingsInput {
    fn resolve(&self, ctx: &Context) -> Result<ChshSettings> {
        if let Some(angles) = self.plane_angles {
            return Ok(ChshSettings::from_plane_angles(angles));
        }
        let given = [self.a, self.b, self.c, self.d];
        if given.iter().all(Option::is_none) {
            return Ok(ChshSettings::tsirelson());
        }
        let [a, b, c, d] = given;
        let need = |v: Option<[f64; 3]>, name: &str| -> Result<UnitVector3> {
            match v {
                Some(v) => config::unit_vector(v, ctx.strict).map_err(usage),
                None => Err(usage(format!("--{name} is required when any of --a/--b/--c/--d is given"))),
            }
        };
        Ok(ChshSettings { a: need(a, "a")?, b: need(b, "b")?, c: need(c, "c")?, d: need(d, "d")? })
    }
}

fn mc_config(ctx: &Context, mc: &McArgs) -> Result<McConfig> {
    Ok(McConfig { grid: ctx.grid(mc.grid)?, n_samples: mc.n_samples, seed: mc.seed, mode: mc.mode.into() })
}

pub fn chsh(
    ctx: &Context,
    settings: SettingsInput,
    source: SourceArg,
    search: Option<f64>,
    mc: &McArgs,
) -> Result<Outcome> {
    let model = ctx.model();
    let source = match source {
        SourceArg::Quantum => CorrelationSource::Quantum,
        SourceArg::Model => CorrelationSource::ModelAnalytic,
        SourceArg::Mc => CorrelationSource::ModelMc(mc_config(ctx, mc)?),
    };

    if let Some(resolution) = search {
        let r = bell_audit::max_violation_search(&model, &source, resolution)?;
        let csv = csv_rows(
            &["a_deg", "b_deg", "c_deg", "d_deg", "s_max", "grid_max"],
            [[r.angles[0], r.angles[1], r.angles[2], r.angles[3], r.s_max, r.grid_max].map(|x| x.to_string())],
        )?;
        let json = json!({ "source": source, "resolution_deg": resolution, "search": r });
        return Ok(Outcome { json, csv, passed: true });
    }

    let settings = settings.resolve(ctx)?;
    let r = bell_audit::audit(&model, &settings, &source)?;
    let p = &r.correlations;
    let csv = csv_rows(
        &["quantity", "value"],
        [
            ("P(a,b)", p.ab),
            ("P(a,d)", p.ad),
            ("P(c,b)", p.cb),
            ("P(c,d)", p.cd),
            ("S", r.s),
            ("classical_bound", r.classical_bound),
            ("tsirelson_bound", r.tsirelson_bound),
        ]
        .map(|(k, v)| [k.to_string(), v.to_string()]),
    )?;
    Ok(Outcome { json: serde_json::to_value(&r)?, csv, passed: true })
}

/// Result of `--assert-tol`.
#[derive(Debug, Serialize)]
pub struct Assertion {
    pub tol: f64,
    /// `max(tol, 3 × propagated error)`
    pub effective_tol: f64,
    pub deviation: f64,
    pub passed: bool,
}

pub fn sweep(
    ctx: &Context,
    pair: &PairArgs,
    which: Option<Observable>,
    factor: Option<FactorArg>,
    mc: &McArgs,
    assert_tol: Option<f64>,
) -> Result<Outcome> {
    let model = ctx.model();
    let engine = McEngine::new(model);
    let grid = ctx.grid(mc.grid)?;
    let (a, b) = ctx.pair(pair)?;

    let (target, fit, analytic): (String, SweepFit, f64) = match factor {
        Some(f) => {
            let kind = factor_kind(f);
            let fit = engine.run_factor_sweep(kind, &grid, mc.n_samples, mc.seed)?;
            let exact = fp_piecewise(&model.weight(kind)).value;
            (format!("factor:{}", if kind == FactorKind::Plain { "plain" } else { "signed" }), fit, exact)
        }
        None => {
            let which = which.unwrap_or(Observable::AB);
            let fit = engine.run_sweep(&a, &b, which, &grid, mc.n_samples, mc.seed, mc.mode.into())?;
            (which.to_string(), fit, model.moment(which, &a, &b)?)
        }
    };

    let deviation = (fit.finite_part - analytic).abs();
    let assertion = match assert_tol {
        Some(tol) if tol.is_nan() || tol < 0.0 => bail!(Usage(format!("--assert-tol must be nonnegative, got {tol}"))),
        Some(tol) => {
            let effective_tol = tol.max(3.0 * fit.finite_part_err);
            Some(Assertion { tol, effective_tol, deviation, passed: deviation <= effective_tol })
        }
        None => None,
    };
    let passed = assertion.as_ref().is_none_or(|x| x.passed);
    if let Some(x) = &assertion {
        eprintln!(
            "{target}: finite part {} ± {:e} vs analytic {analytic}; deviation {:e} {} {:e}",
            fit.finite_part,
            fit.finite_part_err,
            deviation,
            if x.passed { "<=" } else { ">" },
            x.effective_tol
        );
    }

    let mut buf = Vec::new();
    fit.write_csv(&mut buf)?;
    let json = json!({
        "target": target,
        "mode": if factor.is_some() { Value::Null } else { json!(SweepMode::from(mc.mode)) },
        "a": a,
        "b": b,
        "n_samples": mc.n_samples,
        "seed": mc.seed,
        "fit": fit,
        "analytic": analytic,
        "deviation": deviation,
        "assertion": assertion,
    });
    Ok(Outcome { json, csv: String::from_utf8(buf)?, passed })
}

pub fn paradox(ctx: &Context) -> Result<Outcome> {
    let r = bell_audit::paradox_report(&ctx.model())?;
    let csv = csv_rows(
        &["lhs", "rhs", "contradiction"],
        [[r.lhs_abs_finite_part.to_string(), r.rhs_bound.to_string(), r.contradiction.to_string()]],
    )?;
    Ok(Outcome { json: serde_json::to_value(&r)?, csv, passed: true })
}
