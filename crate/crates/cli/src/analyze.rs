//! Two-group analysis of user-supplied feature matrices.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use serde::{Deserialize, Serialize};
use ustat_core::calibration::{
    bootstrap_null_mw, bootstrap_null_t, bootstrap_pvalues, choose_truncation_constant, make_truncation_plan,
    normal_pvalues, observed_statistic, regularized_bootstrap_pvalues, Method, PValueSet, PoolKind, Sided,
    TestStatistic, DEFAULT_CANDIDATES, DEFAULT_CV_REPS,
};
use ustat_core::multiple_testing::bh_procedure;
use ustat_core::rng::derive_key;
use ustat_core::simharness::format_number;
use ustat_core::ustat::TwoSampleData;

use crate::{create_dir, write_manifest, write_output, CliResult, Failure, RunManifest};

#[derive(Args)]
pub struct AnalyzeArgs {
    /// TOML analysis config; replaces the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    x: Option<PathBuf>,
    #[arg(long)]
    y: Option<PathBuf>,
    /// t or mann_whitney.
    #[arg(long, value_parser = crate::parse_stat, default_value = "t")]
    test: TestStatistic,
    /// normal, bootstrap or reg_bootstrap.
    #[arg(long, value_parser = parse_method, default_value = "normal")]
    method: Method,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long = "b", default_value_t = 200)]
    bootstrap_reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// two_sided or one_sided; defaults to two-sided for t and one-sided for Mann-Whitney.
    #[arg(long, value_parser = parse_sided)]
    sided: Option<Sided>,
    #[arg(long)]
    out: PathBuf,
}

fn parse_method(s: &str) -> Result<Method, String> {
    match s {
        "normal" => Ok(Method::Normal),
        "bootstrap" => Ok(Method::Bootstrap),
        "reg_bootstrap" => Ok(Method::RegBootstrap),
        _ => Err("expected normal, bootstrap or reg_bootstrap".into()),
    }
}

fn parse_sided(s: &str) -> Result<Sided, String> {
    match s {
        "two_sided" => Ok(Sided::TwoSided),
        "one_sided" => Ok(Sided::OneSided),
        _ => Err("expected two_sided or one_sided".into()),
    }
}

fn default_alpha() -> f64 {
    0.1
}
fn default_b() -> usize {
    200
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub file_x: PathBuf,
    pub file_y: PathBuf,
    pub test: TestStatistic,
    pub method: Method,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(rename = "B", alias = "b", default = "default_b")]
    pub bootstrap_reps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sided: Option<Sided>,
}

impl AnalysisConfig {
    fn sided(&self) -> Sided {
        self.sided.unwrap_or(match self.test {
            TestStatistic::T => Sided::TwoSided,
            TestStatistic::MannWhitney => Sided::OneSided,
        })
    }
}

fn load_config(args: AnalyzeArgs) -> CliResult<(AnalysisConfig, PathBuf)> {
    match (args.config, args.x, args.y) {
        (Some(path), None, None) => {
            let text = std::fs::read_to_string(&path).map_err(|e| Failure::io(&path, e))?;
            let mut cfg: AnalysisConfig =
                toml::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            // Data paths are relative to the config file.
            let base = path.parent().unwrap_or(Path::new("."));
            cfg.file_x = base.join(&cfg.file_x);
            cfg.file_y = base.join(&cfg.file_y);
            Ok((cfg, args.out))
        }
        (None, Some(x), Some(y)) => Ok((
            AnalysisConfig {
                file_x: x,
                file_y: y,
                test: args.test,
                method: args.method,
                alpha: args.alpha,
                bootstrap_reps: args.bootstrap_reps,
                seed: args.seed,
                sided: args.sided,
            },
            args.out,
        )),
        (Some(_), ..) => Err(Failure::usage("--config cannot be combined with --x/--y")),
        _ => Err(Failure::usage("give --config, or both --x and --y")),
    }
}

struct Matrix {
    header: Vec<String>,
    /// One vector per column.
    columns: Vec<Vec<f64>>,
}

fn read_matrix(path: &Path) -> CliResult<Matrix> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Failure::usage(format!("{}: missing header row", path.display())));
    }
    let mut columns = vec![Vec::new(); header.len()];
    for (i, record) in reader.records().enumerate() {
        // Row numbers count data rows from 1; the header is line 1 of the file.
        let (row, line) = (i + 1, i + 2);
        let record = record.map_err(|e| Failure::usage(format!("{}: row {row}: {e}", path.display())))?;
        if record.len() != header.len() {
            return Err(Failure::usage(format!(
                "{}: row {row} (line {line}) has {} cells, header has {}",
                path.display(),
                record.len(),
                header.len()
            )));
        }
        for (j, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            if cell.is_empty() {
                return Err(Failure::usage(format!(
                    "{}: missing cell in row {row} (line {line}), column `{}`",
                    path.display(),
                    header[j]
                )));
            }
            let v: f64 = cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                Failure::usage(format!(
                    "{}: row {row} (line {line}), column `{}`: `{cell}` is not a finite number",
                    path.display(),
                    header[j]
                ))
            })?;
            columns[j].push(v);
        }
    }
    if columns[0].is_empty() {
        return Err(Failure::usage(format!("{}: no data rows", path.display())));
    }
    Ok(Matrix { header, columns })
}

fn check_headers(x: &Matrix, y: &Matrix) -> CliResult<()> {
    if let Some(j) = (0..x.header.len().min(y.header.len())).find(|&j| x.header[j] != y.header[j]) {
        return Err(Failure::usage(format!(
            "headers differ at column {}: `{}` vs `{}`",
            j + 1,
            x.header[j],
            y.header[j]
        )));
    }
    if x.header.len() != y.header.len() {
        return Err(Failure::usage(format!(
            "column counts differ: {} vs {}",
            x.header.len(),
            y.header.len()
        )));
    }
    Ok(())
}

const CV_TAG: u64 = 0xC0C0;

fn calibrate(cfg: &AnalysisConfig, data: &[TwoSampleData], stats: &[f64]) -> CliResult<PValueSet> {
    let sided = cfg.sided();
    let kind = match sided {
        Sided::TwoSided => PoolKind::Absolute,
        Sided::OneSided => PoolKind::Signed,
    };
    let set = match (cfg.method, cfg.test) {
        (Method::Normal, _) => normal_pvalues(stats, sided)?,
        (Method::Bootstrap, TestStatistic::T) => {
            bootstrap_pvalues(&bootstrap_null_t(data, cfg.bootstrap_reps, cfg.seed, kind)?, stats, sided)?
        }
        (Method::Bootstrap, TestStatistic::MannWhitney) => {
            bootstrap_pvalues(&bootstrap_null_mw(data, cfg.bootstrap_reps, cfg.seed, kind)?, stats, sided)?
        }
        (Method::RegBootstrap, TestStatistic::T) => {
            let choice = choose_truncation_constant(
                data,
                &DEFAULT_CANDIDATES,
                DEFAULT_CV_REPS,
                derive_key(cfg.seed, &[CV_TAG]),
            )?;
            let plan = make_truncation_plan(data, data.len(), choice.constant)?;
            regularized_bootstrap_pvalues(data, &plan, cfg.bootstrap_reps, cfg.seed, sided)?
        }
        (Method::RegBootstrap, TestStatistic::MannWhitney) => {
            return Err(Failure::usage("reg_bootstrap applies to the t test only"))
        }
    };
    Ok(set)
}

pub fn run(args: AnalyzeArgs) -> CliResult<()> {
    let started = Instant::now();
    let (cfg, out) = load_config(args)?;
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(Failure::usage("alpha must lie in (0, 1)"));
    }
    if cfg.method != Method::Normal && cfg.bootstrap_reps == 0 {
        return Err(Failure::usage("B must be at least 1"));
    }
    let mx = read_matrix(&cfg.file_x)?;
    let my = read_matrix(&cfg.file_y)?;
    check_headers(&mx, &my)?;
    let m = mx.header.len();

    let mut stats = vec![None; m];
    let mut valid_data = Vec::new();
    let mut valid_idx = Vec::new();
    let mut degenerate = Vec::new();
    for k in 0..m {
        let d = TwoSampleData::new(mx.columns[k].clone(), my.columns[k].clone())?;
        match observed_statistic(&d, cfg.test) {
            Ok(s) => {
                stats[k] = Some(s);
                valid_idx.push(k);
                valid_data.push(d);
            }
            Err(e) if e.is_degeneracy() => degenerate.push(k),
            Err(e) => return Err(e.into()),
        }
    }
    for &k in &degenerate {
        eprintln!("warning: feature `{}` is degenerate; its p-value is set to 1", mx.header[k]);
    }

    let mut pvalues = vec![1.0; m];
    let mut set_meta = None;
    if !valid_idx.is_empty() {
        let valid_stats: Vec<f64> = valid_idx.iter().map(|&k| stats[k].unwrap()).collect();
        let set = calibrate(&cfg, &valid_data, &valid_stats)?;
        for (&k, &p) in valid_idx.iter().zip(&set.values) {
            pvalues[k] = p;
        }
        set_meta = Some(set);
    }
    let bh = bh_procedure(&pvalues, cfg.alpha)?;
    let mut rejected = vec![false; m];
    for &k in &bh.rejected {
        rejected[k] = true;
    }

    create_dir(&out)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["feature", "statistic", "p_value", "rejected"]).unwrap();
    for k in 0..m {
        let stat = stats[k].map(format_number).unwrap_or_default();
        let rej = if rejected[k] { "true" } else { "false" };
        w.write_record([mx.header[k].as_str(), &stat, &format_number(pvalues[k]), rej])
            .unwrap();
    }
    let body = String::from_utf8(w.into_inner().unwrap()).unwrap();
    let mut outputs = Vec::new();
    write_output(&out, "results.csv", &body, &mut outputs)?;

    let names = |idx: &[usize]| idx.iter().map(|&k| mx.header[k].clone()).collect::<Vec<_>>();
    let over: Vec<usize> = set_meta
        .as_ref()
        .map(|s| s.over_truncated.iter().map(|&j| valid_idx[j]).collect())
        .unwrap_or_default();
    let summary = serde_json::json!({
        "k_hat": bh.k_hat,
        "rejections": bh.rejected.len(),
        "threshold": bh.threshold,
        "features": m,
        "test": cfg.test,
        "method": cfg.method,
        "sided": cfg.sided(),
        "alpha": cfg.alpha,
        "bootstrap_reps": if cfg.method == Method::Normal { 0 } else { cfg.bootstrap_reps },
        "seed": cfg.seed,
        "truncation_constant": set_meta.as_ref().and_then(|s| s.truncation_constant),
        "discarded_bootstrap": set_meta.as_ref().map_or(0, |s| s.discarded),
        "degenerate_features": names(&degenerate),
        "over_truncated_features": names(&over),
    });
    let text = serde_json::to_string_pretty(&summary).unwrap() + "\n";
    write_output(&out, "summary.json", &text, &mut outputs)?;

    let mut extra = serde_json::Map::new();
    extra.insert("degenerate_features".into(), degenerate.len().into());
    write_manifest(
        &out,
        RunManifest {
            command: "analyze",
            seed: cfg.seed,
            config: cfg,
            tool_version: env!("CARGO_PKG_VERSION"),
            outputs,
            wall_time_secs: started.elapsed().as_secs_f64(),
            extra,
        },
    )
}
