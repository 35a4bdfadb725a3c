//! `pfbell`: verification, finite parts, moments, CHSH audits, Monte-Carlo
//! sweeps and the absolute-value check, with JSON or CSV output.
//!
//! Exit codes: 0 success, 1 a check failed, 2 invalid input.

mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pfbell_core::lhv_model::Observable;
use pfbell_core::mc_engine::SweepMode;

use crate::config::{FloatList, GridSpec};

#[derive(Parser, Debug)]
#[command(name = "pfbell", version, about = "Pseudo-functional hidden-variable model toolkit")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Override model constants, e.g. `C=0.5` or `C=0.5,f=0.8,beta=1.6`
    #[arg(long, global = true)]
    constants: Option<String>,

    /// Reject setting vectors whose norm is off by more than 1e-6
    #[arg(long, global = true)]
    strict: bool,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Omit the timestamp so identical runs give identical bytes
    #[arg(long, global = true)]
    deterministic: bool,

    /// Worker threads for Monte-Carlo work (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceArg {
    Quantum,
    Model,
    Mc,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorArg {
    /// `g ≡ 1`
    Plain,
    /// `g = sign(f − λ)`
    Signed,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeArg {
    Joint,
    Factorized,
}

impl From<ModeArg> for SweepMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Joint => SweepMode::Joint,
            ModeArg::Factorized => SweepMode::Factorized,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct PairArgs {
    /// Setting a as `x,y,z`
    #[arg(long, value_parser = config::parse_triple, allow_hyphen_values = true)]
    a: Option<[f64; 3]>,
    /// Setting b as `x,y,z`
    #[arg(long, value_parser = config::parse_triple, allow_hyphen_values = true)]
    b: Option<[f64; 3]>,
}

#[derive(Args, Debug, Clone)]
pub struct McArgs {
    /// Epsilon grid `start:end:count`, log spaced
    #[arg(long, value_parser = config::parse_grid)]
    grid: Option<GridSpec>,
    /// Samples per epsilon point (per factor in factorized mode)
    #[arg(long = "n", default_value_t = 100_000)]
    n_samples: usize,
    #[arg(long, env = "PFBELL_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Factorized)]
    mode: ModeArg,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the analytic checklist and print a pass/fail table
    Verify {
        #[command(flatten)]
        pair: PairArgs,
    },
    /// Finite part of a piecewise-constant weight over λ
    Fp {
        /// One of the model's λ weights
        #[arg(long, value_enum, conflicts_with_all = ["upper", "breakpoints", "values"])]
        factor: Option<FactorArg>,
        /// Upper limit of the integral
        #[arg(long, requires = "values")]
        upper: Option<f64>,
        /// Breakpoints `t1,t2,...`
        #[arg(long, value_parser = config::parse_list, allow_hyphen_values = true)]
        breakpoints: Option<FloatList>,
        /// Values on each segment, one more than the breakpoints
        #[arg(long, value_parser = config::parse_list, allow_hyphen_values = true, requires = "upper")]
        values: Option<FloatList>,
        /// Also report the integral cut off at this epsilon
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Closed-form moments for a pair of settings
    Moments {
        #[command(flatten)]
        pair: PairArgs,
        /// Also report the regularized moments at this epsilon
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// CHSH audit or maximal-violation search
    Chsh {
        #[arg(long, value_parser = config::parse_triple, allow_hyphen_values = true)]
        a: Option<[f64; 3]>,
        #[arg(long, value_parser = config::parse_triple, allow_hyphen_values = true)]
        b: Option<[f64; 3]>,
        #[arg(long, value_parser = config::parse_triple, allow_hyphen_values = true)]
        c: Option<[f64; 3]>,
        #[arg(long, value_parser = config::parse_triple, allow_hyphen_values = true)]
        d: Option<[f64; 3]>,
        /// Coplanar settings `a,b,c,d` in degrees (x–z plane)
        #[arg(long, value_parser = config::parse_angles, allow_hyphen_values = true, conflicts_with_all = ["a", "b", "c", "d"])]
        plane_angles: Option<[f64; 4]>,
        /// Settings at 0°, 45°, 90°, 135° (the default)
        #[arg(long, conflicts_with_all = ["a", "b", "c", "d", "plane_angles"])]
        tsirelson: bool,
        #[arg(long, value_enum, default_value_t = SourceArg::Model)]
        source: SourceArg,
        /// Search coplanar settings for the largest S
        #[arg(long)]
        search: bool,
        /// Search grid step in degrees
        #[arg(long, default_value_t = 1.0, requires = "search")]
        resolution: f64,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Regularized Monte-Carlo sweep and finite-part fit
    Sweep {
        #[command(flatten)]
        pair: PairArgs,
        /// Moment to sweep
        #[arg(long, value_parser = clap::value_parser!(Observable), conflicts_with = "factor")]
        which: Option<Observable>,
        /// Sweep a single λ factor instead of a moment
        #[arg(long, value_enum)]
        factor: Option<FactorArg>,
        #[command(flatten)]
        mc: McArgs,
        /// Fail unless |finite part − analytic| ≤ max(tol, 3 × propagated error)
        #[arg(long)]
        assert_tol: Option<f64>,
    },
    /// Compare |Fp ∫ sign(f−λ)/λ| with Fp ∫ 1/λ
    Paradox,
}

fn run(cli: Cli) -> anyhow::Result<commands::Outcome> {
    let constants = match &cli.global.constants {
        Some(s) => config::parse_constants(s).map_err(commands::usage)?,
        None => pfbell_core::ModelConstants::canonical(),
    };
    let ctx = commands::Context { constants, strict: cli.global.strict };
    match cli.command {
        Command::Verify { pair } => commands::verify(&ctx, &pair),
        Command::Fp { factor, upper, breakpoints, values, epsilon } => {
            commands::fp(&ctx, factor, upper, breakpoints.map(|l| l.0), values.map(|l| l.0), epsilon)
        }
        Command::Moments { pair, epsilon } => commands::moments(&ctx, &pair, epsilon),
        Command::Chsh { a, b, c, d, plane_angles, tsirelson: _, source, search, resolution, mc } => {
            let settings = commands::SettingsInput { a, b, c, d, plane_angles };
            commands::chsh(&ctx, settings, source, search.then_some(resolution), &mc)
        }
        Command::Sweep { pair, which, factor, mc, assert_tol } => {
            commands::sweep(&ctx, &pair, which, factor, &mc, assert_tol)
        }
        Command::Paradox => commands::paradox(&ctx),
    }
}

fn emit(global: &GlobalArgs, name: &str, outcome: &commands::Outcome) -> anyhow::Result<()> {
    let body = match global.format {
        Format::Json => {
            let mut envelope = serde_json::Map::new();
            envelope.insert("command".into(), name.into());
            envelope.insert("version".into(), env!("CARGO_PKG_VERSION").into());
            if !global.deterministic {
                let now = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH)?;
                envelope.insert("generated_at_unix".into(), now.as_secs().into());
            }
            envelope.insert("passed".into(), outcome.passed.into());
            envelope.insert("report".into(), outcome.json.clone());
            serde_json::to_string_pretty(&serde_json::Value::Object(envelope))? + "\n"
        }
        Format::Csv => outcome.csv.clone(),
    };
    match &global.out {
        Some(path) => std::fs::write(path, body)?,
        None => std::io::stdout().lock().write_all(body.as_bytes())?,
    }
    Ok(())
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Verify { .. } => "verify",
        Command::Fp { .. } => "fp",
        Command::Moments { .. } => "moments",
        Command::Chsh { .. } => "chsh",
        Command::Sweep { .. } => "sweep",
        Command::Paradox => "paradox",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let global = cli.global.clone();
    let name = command_name(&cli.command);

    if let Some(n) = global.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }

    let outcome = match run(cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(commands::exit_code(&e));
        }
    };
    if let Err(e) = emit(&global, name, &outcome) {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    if outcome.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
