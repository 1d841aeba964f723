//! `ustat`: simulation, two-group analysis and tail-ratio verification.

mod analyze;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use ustat_core::calibration::{Method, TestStatistic};
use ustat_core::simharness::{
    curves_csv, run_fdr_experiment, run_tail_ratio_experiment, tail_ratio_csv, Design, ErrorLaw,
    ExperimentConfig, TailRatioConfig, Variant,
};
use ustat_core::Error;

#[derive(Parser)]
#[command(name = "ustat", version, about = "Studentized U-statistics and FDR-controlled multiple testing")]
struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "USTAT_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an FDR simulation and write curves.csv.
    Simulate(SimulateArgs),
    /// Test every feature of two CSV matrices and write results.csv.
    Analyze(analyze::AnalyzeArgs),
    /// Estimate tail ratios P(T ≥ x)/(1 − Φ(x)) and write tail_ratio.csv.
    MdevVerify(MdevArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// TOML experiment config. Without it, --design, --variant and --c describe a desk-scale run.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Overrides master_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Force m = 500, 50 replicates and B = 200.
    #[arg(long)]
    desk_scale: bool,
    #[arg(long, value_parser = parse_design)]
    design: Option<Design>,
    #[arg(long, value_parser = parse_variant)]
    variant: Option<Variant>,
    #[arg(long)]
    c: Option<f64>,
}

#[derive(Args)]
struct MdevArgs {
    /// mw or t.
    #[arg(long, value_parser = parse_stat)]
    stat: TestStatistic,
    /// uniform, normal, exp<scale> (exp2), t<df> (t4), beta<a>_<b>.
    #[arg(long, value_parser = parse_law)]
    dist: ErrorLaw,
    /// Second-group law; defaults to --dist.
    #[arg(long, value_parser = parse_law)]
    dist2: Option<ErrorLaw>,
    #[arg(long)]
    n: usize,
    /// Second-group size; defaults to --n.
    #[arg(long)]
    n2: Option<usize>,
    #[arg(long, default_value_t = 200_000)]
    reps: usize,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,1,2,2.5")]
    xs: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
pub(crate) struct RunManifest<C: Serialize> {
    pub command: &'static str,
    pub config: C,
    pub seed: u64,
    pub tool_version: &'static str,
    pub outputs: Vec<String>,
    pub wall_time_secs: f64,
    #[serde(flatten)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

/// A failure with its exit code: 2 for bad input, 3 for runtime degeneracy.
#[derive(Debug)]
pub(crate) struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Failure { code: 1, message: format!("{}: {e}", path.display()) }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidArgument(_) | Error::UnsupportedKernel(_) | Error::BudgetExceeded { .. } => 2,
            Error::DegenerateSample(_)
            | Error::ExcessiveDegeneracy { .. }
            | Error::NoValidConstant
            | Error::RedrawCapExceeded { .. } => 3,
        };
        Failure { code, message: e.to_string() }
    }
}

pub(crate) type CliResult<T> = std::result::Result<T, Failure>;

fn parse_design(s: &str) -> Result<Design, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| "expected sim1_exp, sim1_t, sim2_case1 or sim2_case2".to_string())
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| "expected homogeneous, heteroscedastic, identical or non_identical".to_string())
}

fn parse_stat(s: &str) -> Result<TestStatistic, String> {
    match s {
        "mw" | "mann_whitney" => Ok(TestStatistic::MannWhitney),
        "t" | "two_sample_t" => Ok(TestStatistic::T),
        _ => Err("expected mw or t".into()),
    }
}

fn parse_law(s: &str) -> Result<ErrorLaw, String> {
    let num = |v: &str| v.parse::<f64>().map_err(|_| format!("bad number in `{s}`"));
    let law = match s {
        "uniform" => ErrorLaw::Uniform { low: 0.0, high: 1.0 },
        "normal" => ErrorLaw::Normal { mean: 0.0, sd: 1.0 },
        _ if s.starts_with("exp") => ErrorLaw::Exponential { scale: num(&s[3..])? },
        _ if s.starts_with("beta") => {
            let (a, b) = s[4..].split_once('_').ok_or("expected beta<a>_<b>")?;
            ErrorLaw::Beta { a: num(a)?, b: num(b)? }
        }
        _ if s.starts_with('t') => ErrorLaw::StudentT { df: num(&s[1..])? },
        _ => return Err("expected uniform, normal, exp<scale>, t<df> or beta<a>_<b>".into()),
    };
    law.validate().map_err(|e| e.to_string())?;
    Ok(law)
}

/// 1-based line of the first `key = ...` assignment naming a field in `message`.
fn anchor_line(text: &str, message: &str) -> Option<usize> {
    const KEYS: [&str; 14] = [
        "design",
        "variant",
        "n1",
        "n2",
        "m",
        "c",
        "alphas",
        "bootstrap_reps",
        "n_reps",
        "methods",
        "truncation_candidates",
        "cv_bootstrap_reps",
        "error1",
        "error2",
    ];
    let words: Vec<&str> = message
        .split(|ch: char| !(ch.is_alphanumeric() || ch == '_'))
        .collect();
    let key = KEYS.iter().find(|k| words.contains(k))?;
    text.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(key)
            .is_some_and(|rest| rest.trim_start().starts_with('=') || rest.starts_with(']'))
            || l.starts_with(&format!("[{key}"))
    })
    .map(|i| i + 1)
}

fn load_experiment(path: &Path) -> CliResult<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    let cfg: ExperimentConfig =
        toml::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    if let Err(e) = cfg.validate() {
        let msg = e.to_string();
        let at = match anchor_line(&text, &msg) {
            Some(line) => format!("{}:{line}", path.display()),
            None => path.display().to_string(),
        };
        return Err(Failure::usage(format!("{at}: {msg}")));
    }
    Ok(cfg)
}

pub(crate) fn write_output(dir: &Path, name: &str, contents: &str, outputs: &mut Vec<String>) -> CliResult<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Failure::io(&path, e))?;
    outputs.push(path.display().to_string());
    Ok(())
}

pub(crate) fn write_manifest<C: Serialize>(dir: &Path, mut manifest: RunManifest<C>) -> CliResult<()> {
    let path = dir.join("manifest.json");
    manifest.outputs.push(path.display().to_string());
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, json + "\n").map_err(|e| Failure::io(&path, e))
}

pub(crate) fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))
}

fn simulate(args: SimulateArgs) -> CliResult<()> {
    let started = Instant::now();
    let mut cfg = match (&args.config, args.design, args.variant, args.c) {
        (Some(path), None, None, None) => load_experiment(path)?,
        (None, Some(d), Some(v), Some(c)) => ExperimentConfig::desk(d, v, c),
        (Some(_), ..) => return Err(Failure::usage("--config cannot be combined with --design/--variant/--c")),
        _ => return Err(Failure::usage("give --config, or all of --design, --variant and --c")),
    };
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if args.desk_scale {
        let desk = ExperimentConfig::desk(cfg.design, cfg.variant, cfg.c);
        cfg.m = desk.m;
        cfg.n_reps = desk.n_reps;
        cfg.bootstrap_reps = desk.bootstrap_reps;
    }
    cfg.validate()?;
    if cfg.methods.is_empty() {
        cfg.methods = cfg.methods();
    }
    let result = run_fdr_experiment(&cfg)?;
    create_dir(&args.out)?;
    let mut outputs = Vec::new();
    write_output(&args.out, "curves.csv", &curves_csv(&result.curves), &mut outputs)?;
    let mut extra = serde_json::Map::new();
    extra.insert("redraws".into(), result.total_redraws.into());
    extra.insert("discarded_bootstrap".into(), result.total_discarded_bootstrap.into());
    if cfg.methods.contains(&Method::RegBootstrap) {
        let chosen: Vec<Option<f64>> = result.replicates.iter().map(|r| r.truncation_constant).collect();
        extra.insert("truncation_constants".into(), serde_json::to_value(chosen).unwrap());
    }
    write_manifest(
        &args.out,
        RunManifest {
            command: "simulate",
            seed: cfg.master_seed,
            config: cfg,
            tool_version: env!("CARGO_PKG_VERSION"),
            outputs,
            wall_time_secs: started.elapsed().as_secs_f64(),
            extra,
        },
    )
}

fn mdev_verify(args: MdevArgs) -> CliResult<()> {
    let started = Instant::now();
    let cfg = TailRatioConfig {
        statistic: args.stat,
        error1: args.dist,
        error2: args.dist2.unwrap_or(args.dist),
        n1: args.n,
        n2: args.n2.unwrap_or(args.n),
        n_reps: args.reps,
        xs: args.xs,
        seed: args.seed,
    };
    let curve = run_tail_ratio_experiment(&cfg)?;
    create_dir(&args.out)?;
    let mut outputs = Vec::new();
    write_output(&args.out, "tail_ratio.csv", &tail_ratio_csv(&curve), &mut outputs)?;
    let unreliable: Vec<f64> = curve.points.iter().filter(|p| p.unreliable).map(|p| p.x).collect();
    if !unreliable.is_empty() {
        eprintln!("warning: fewer than 20 exceedances at x = {unreliable:?}");
    }
    let mut extra = serde_json::Map::new();
    extra.insert("discarded_replicates".into(), curve.discarded.into());
    extra.insert("unreliable_xs".into(), serde_json::to_value(unreliable).unwrap());
    write_manifest(
        &args.out,
        RunManifest {
            command: "mdev-verify",
            seed: cfg.seed,
            config: cfg,
            tool_version: env!("CARGO_PKG_VERSION"),
            outputs,
            wall_time_secs: started.elapsed().as_secs_f64(),
            extra,
        },
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(w) = cli.workers {
        if w == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .expect("thread pool is configured once");
    }
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Analyze(a) => analyze::run(a),
        Command::MdevVerify(a) => mdev_verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn law_names() {
        assert_eq!(parse_law("exp2").unwrap(), ErrorLaw::Exponential { scale: 2.0 });
        assert_eq!(parse_law("t4").unwrap(), ErrorLaw::StudentT { df: 4.0 });
        assert_eq!(parse_law("beta10_10").unwrap(), ErrorLaw::Beta { a: 10.0, b: 10.0 });
        assert!(parse_law("t2").is_err());
        assert!(parse_law("cauchy").is_err());
    }

    #[test]
    fn anchors_validation_messages() {
        let text = "design = \"sim1_t\"\nvariant = \"homogeneous\"\nc = 1.0\nm = 2\n";
        assert_eq!(anchor_line(text, "m must be at least 4"), Some(4));
        assert_eq!(anchor_line(text, "nothing known"), None);
    }
}
