//! `parabsynth` command-line front end.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use parabsynth::germs::{Center, Germ, ModulusData};
use parabsynth::model::{self, ModelParams};
use parabsynth::portrait::{self, PortraitOptions, SynthField};
use parabsynth::renorm::{self, RenormOptions};
use parabsynth::synthesis::{synthesize, Diagnostics, HornReport, SynthOptions, TaylorReport};
use parabsynth::verify::{self, Report, SuiteInput};
use parabsynth::{flow::ModelField, InputError, C};

#[derive(Parser)]
#[command(name = "parabsynth", version, about = "Synthesis of parabolic germs from a horn-map modulus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Verification suite: a module name, `acceptance`, or `criterion-N`.
    #[arg(long, global = true)]
    suite: Option<String>,
    /// Run above the admissible bound on lambda.
    #[arg(long, global = true)]
    force: bool,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a germ and write `synth.json`.
    Synth,
    /// Phase portrait: `portrait.svg`, `portrait.csv`, `portrait.json`.
    Portrait,
    /// Run verification suites and write `verify.json`.
    Verify,
    /// Parabolic renormalization fixed point: `renorm.json`.
    Renorm,
}

enum Failure {
    Config(String),
    Numerical(String),
    Verification(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Verification(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(s) => write!(f, "config error: {s}"),
            Failure::Numerical(s) => write!(f, "numerical failure: {s}"),
            Failure::Verification(s) => write!(f, "verification failed: {s}"),
        }
    }
}

fn lib_failure<E: Into<parabsynth::Error>>(e: E) -> Failure {
    let e: parabsynth::Error = e.into();
    if e.is_input_error() {
        Failure::Config(e.to_string())
    } else {
        Failure::Numerical(e.to_string())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SynthConfig {
    modulus: ModulusData,
    /// Defaults to half the admissible bound.
    #[serde(default)]
    lambda: Option<f64>,
    #[serde(default)]
    options: SynthOptions,
    #[serde(default = "default_horn_samples")]
    horn_samples: usize,
    #[serde(default)]
    taylor: Option<TaylorConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaylorConfig {
    order: usize,
    radius: f64,
}

fn default_horn_samples() -> usize {
    20
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum FieldKind {
    X0,
    Xf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PortraitConfig {
    field: FieldKind,
    #[serde(default)]
    lambda: Option<f64>,
    /// Used by `x0`; `xf` takes it from the modulus.
    #[serde(default)]
    mu: Option<C>,
    #[serde(default)]
    modulus: Option<ModulusData>,
    #[serde(default)]
    synth: SynthOptions,
    /// Seeds per side of the grid.
    #[serde(default = "default_grid")]
    grid: usize,
    #[serde(default)]
    options: PortraitOptions,
}

fn default_grid() -> usize {
    9
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct VerifyConfig {
    suite: Option<String>,
    modulus: Option<ModulusData>,
    lambda: Option<f64>,
    seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RenormConfig {
    phi0: Germ,
    #[serde(default)]
    mu: C,
    /// Defaults to the renormalization bound.
    #[serde(default)]
    lambda: Option<f64>,
    #[serde(default)]
    options: RenormOptions,
    #[serde(default = "default_horn_samples")]
    horn_samples: usize,
}

#[derive(Serialize)]
struct SynthBundle<'a> {
    lambda: f64,
    params: &'a ModelParams,
    modulus: &'a ModulusData,
    options: &'a SynthOptions,
    bounds: &'a model::SynthesisBounds,
    diagnostics: &'a Diagnostics,
    horn_maps: HornReport,
    taylor: Option<TaylorReport>,
}

#[derive(Serialize)]
struct PortraitSummary<'a> {
    field: &'static str,
    lambda: f64,
    mu: C,
    annotations: &'a [portrait::Annotation],
    counts: &'a portrait::SingularityCounts,
    spinal: &'a Option<parabsynth::globalize::SpinalGraph>,
}

#[derive(Serialize)]
struct VerifyBundle<'a> {
    suite: &'a str,
    passed: bool,
    reports: &'a [Report],
}

#[derive(Serialize)]
struct RenormBundle<'a> {
    phi0: &'a Germ,
    mu: C,
    lambda: f64,
    history: &'a renorm::RenormHistory,
    fixed_point: &'a Germ,
    check: Option<renorm::FixedPointCheck>,
}

fn read_config<T: DeserializeOwned>(path: Option<&Path>) -> Result<T, Failure> {
    let path = path.ok_or_else(|| Failure::Config("--config is required".into()))?;
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn write_out(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Config(format!("{}: {e}", dir.display())))?;
    let p = dir.join(name);
    fs::write(&p, contents).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
    Ok(p)
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn cmd_synth(cli: &Cli) -> Result<(), Failure> {
    let mut cfg: SynthConfig = read_config(cli.config.as_deref())?;
    cfg.options.force |= cli.force;
    cfg.modulus.validate().map_err(lib_failure)?;
    let lambda = match cfg.lambda {
        Some(l) => l,
        None => model::synthesis_bounds(&cfg.modulus).map_err(lib_failure)?.lambda_max / 2.0,
    };
    let r = synthesize(&cfg.modulus, lambda, &cfg.options).map_err(lib_failure)?;
    let horn_maps = r.measure_horn_maps(cfg.horn_samples).map_err(lib_failure)?;
    let taylor = match &cfg.taylor {
        Some(t) => Some(r.taylor_delta(t.order, t.radius).map_err(lib_failure)?),
        None => None,
    };
    let bundle = SynthBundle {
        lambda,
        params: &r.params,
        modulus: &r.modulus,
        options: &r.options,
        bounds: &r.bounds,
        diagnostics: &r.diagnostics,
        horn_maps,
        taylor,
    };
    let p = write_out(&cli.out, "synth.json", &to_json(&bundle))?;
    println!(
        "lambda {lambda:e}: {} iterations, ||f|| {:.3e}, horn residual {:.3e} -> {}",
        r.diagnostics.iterations,
        r.diagnostics.sampled_f_norm,
        bundle.horn_maps.max_relative_error,
        p.display()
    );
    Ok(())
}

fn cmd_portrait(cli: &Cli) -> Result<(), Failure> {
    let cfg: PortraitConfig = read_config(cli.config.as_deref())?;
    let seeds = portrait::grid_seeds(cfg.grid);
    let (pt, lambda, mu, field) = match cfg.field {
        FieldKind::X0 => {
            let lambda = cfg.lambda.ok_or_else(|| Failure::Config("field x0 needs lambda".into()))?;
            let mu = cfg.mu.unwrap_or_default();
            let p = ModelParams::new(lambda, mu).map_err(lib_failure)?;
            let pt = portrait::portrait(&ModelField::new(p), &seeds, &cfg.options).map_err(lib_failure)?;
            (pt, lambda, mu, "x0")
        }
        FieldKind::Xf => {
            let m = cfg.modulus.ok_or_else(|| Failure::Config("field xf needs modulus".into()))?;
            let mut so = cfg.synth;
            so.force |= cli.force;
            let lambda = match cfg.lambda {
                Some(l) => l,
                None => model::synthesis_bounds(&m).map_err(lib_failure)?.lambda_max / 2.0,
            };
            let r = synthesize(&m, lambda, &so).map_err(lib_failure)?;
            let pt = portrait::portrait(&SynthField::new(&r), &seeds, &cfg.options).map_err(lib_failure)?;
            (pt, lambda, m.mu, "xf")
        }
    };
    write_out(&cli.out, "portrait.svg", &portrait::to_svg(&pt))?;
    write_out(&cli.out, "portrait.csv", &portrait::to_csv(&pt))?;
    let summary = PortraitSummary {
        field,
        lambda,
        mu,
        annotations: &pt.annotations,
        counts: &pt.counts,
        spinal: &pt.spinal,
    };
    write_out(&cli.out, "portrait.json", &to_json(&summary))?;
    println!(
        "{} trajectories, {} stationary points, {} poles -> {}",
        pt.trajectories.len(),
        pt.counts.stationary,
        pt.counts.poles,
        cli.out.display()
    );
    Ok(())
}

fn cmd_verify(cli: &Cli) -> Result<(), Failure> {
    let cfg: VerifyConfig = match &cli.config {
        Some(p) => read_config(Some(p))?,
        None => VerifyConfig::default(),
    };
    let suite = cli.suite.clone().or(cfg.suite).unwrap_or_else(|| "acceptance".into());
    if let Some(m) = &cfg.modulus {
        m.validate().map_err(lib_failure)?;
    }
    let input = SuiteInput {
        modulus: cfg.modulus,
        lambda: cfg.lambda,
        seed: cli.seed.or(cfg.seed).unwrap_or(0),
    };
    let reports = verify::run_suite(&suite, &input).ok_or_else(|| {
        Failure::Config(format!(
            "unknown suite {suite:?}; expected one of {} or criterion-N",
            verify::SUITES.join(", ")
        ))
    })?;
    for r in &reports {
        println!("{}", r.line());
    }
    let passed = reports.iter().all(|r| r.passed);
    let bundle = VerifyBundle {
        suite: &suite,
        passed,
        reports: &reports,
    };
    write_out(&cli.out, "verify.json", &to_json(&bundle))?;
    if passed {
        Ok(())
    } else {
        let n = reports.iter().filter(|r| !r.passed).count();
        Err(Failure::Verification(format!("{n} of {} reports failed", reports.len())))
    }
}

fn cmd_renorm(cli: &Cli) -> Result<(), Failure> {
    let mut cfg: RenormConfig = read_config(cli.config.as_deref())?;
    cfg.options.force |= cli.force;
    if cfg.phi0.center != Center::Zero {
        return Err(Failure::Config("phi0 must be centered at 0".into()));
    }
    let lambda = match cfg.lambda {
        Some(l) => l,
        None => renorm::renorm_bounds(cfg.mu, &cfg.phi0).map_err(lib_failure)?.lambda_hat,
    };
    let out = renorm::renorm_iterate(&cfg.phi0, cfg.mu, lambda, &cfg.options).map_err(lib_failure)?;
    let check = if out.history.converged {
        Some(
            renorm::check_fixed_point(&cfg.phi0, cfg.mu, lambda, &out.state, &cfg.options, cfg.horn_samples)
                .map_err(lib_failure)?,
        )
    } else {
        None
    };
    let bundle = RenormBundle {
        phi0: &cfg.phi0,
        mu: cfg.mu,
        lambda,
        history: &out.history,
        fixed_point: out.fixed_point(),
        check,
    };
    let p = write_out(&cli.out, "renorm.json", &to_json(&bundle))?;
    println!(
        "lambda {lambda:e}: {} steps, max ratio {:?}, converged {} -> {}",
        out.history.differences.len(),
        out.history.max_ratio,
        out.history.converged,
        p.display()
    );
    if out.history.converged {
        Ok(())
    } else {
        Err(Failure::Numerical(format!(
            "no convergence in {} iterations",
            cfg.options.max_iter
        )))
    }
}

fn init_threads() -> Result<(), Failure> {
    if let Ok(v) = std::env::var("PARABSYNTH_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Failure::Config(format!("PARABSYNTH_THREADS must be a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = init_threads().and_then(|_| match cli.command {
        Command::Synth => cmd_synth(&cli),
        Command::Portrait => cmd_portrait(&cli),
        Command::Verify => cmd_verify(&cli),
        Command::Renorm => cmd_renorm(&cli),
    });
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("parabsynth: {e}");
            ExitCode::from(e.code())
        }
    }
}
