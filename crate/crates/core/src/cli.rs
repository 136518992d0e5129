//! Command-line front end: `build`, `fit`, `cluster` and `bench`.
//!
//! Exit codes: 0 success, 1 usage or parse error, 2 degenerate input,
//! 3 best-effort result without convergence. Failures print a JSON object to
//! stderr.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde::Serialize;
use serde_json::{json, Value};

use crate::clustering::{
    accuracy, assign_labels, bounded_noise_sample_radii, gmm_sample, random_gmm, recover_set,
    sub_seed, LossChoice, NoiseModel, RecoveryLoss,
};
use crate::error::{Error, Result};
use crate::extraction::set_distance;
use crate::fitting::{FitOptions, SampleSet};
use crate::generating::{solve_g, PointSet};
use crate::loss::{describe_simplicial, loss_g, SimplicialLoss, TransformedLoss};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DEGENERATE: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "finiteloss",
    version,
    about = "Loss functions for finite point sets"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generating matrix and loss for an exact point set.
    Build(BuildArgs),
    /// Recover a point set from noisy samples.
    Fit(FitArgs),
    /// Label samples by descent on the loss of a recovered set.
    Cluster(ClusterArgs),
    /// Regenerate a benchmark scenario across seeds.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct PipelineArgs {
    /// Fitting options as JSON.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = LossArg::Transformed)]
    pub loss: LossArg,
    /// Use the real parts of the recovered zeros (default).
    #[arg(long, conflicts_with = "complex")]
    pub real: bool,
    /// Keep the fitted generating matrix for the f_G loss instead of
    /// rebuilding it from real parts.
    #[arg(long)]
    pub complex: bool,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub output: PathBuf,
    /// Known true set; adds the set distance to the report.
    #[arg(long)]
    pub truth_set: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Args, Debug)]
pub struct ClusterArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Recover a set of this size from the samples.
    #[arg(long, required_unless_present = "s_star", conflicts_with = "s_star")]
    pub k: Option<usize>,
    /// Use this recovered set instead of fitting.
    #[arg(long)]
    pub s_star: Option<PathBuf>,
    #[arg(long)]
    pub output: PathBuf,
    /// Treat the last input column as the true cluster index.
    #[arg(long)]
    pub truth: bool,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Also write a JSON report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    Transformed,
    Fg,
}

impl From<LossArg> for LossChoice {
    fn from(l: LossArg) -> Self {
        match l {
            LossArg::Transformed => LossChoice::Transformed,
            LossArg::Fg => LossChoice::Fg,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Scenario {
    Table1,
    Example62,
    Gmm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum NoiseArg {
    Uniform,
    TruncatedNormal,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub scenario: Scenario,
    /// Number of seeds to run.
    #[arg(long, default_value_t = 5)]
    pub seeds: u64,
    #[arg(long)]
    pub output: PathBuf,
    /// Noise radii (table1), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    /// Samples per point (table1), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub counts: Option<Vec<usize>>,
    /// Dimension and cluster count (gmm).
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    /// Samples per mixture instance (gmm).
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, value_enum, default_value_t = NoiseArg::TruncatedNormal)]
    pub noise: NoiseArg,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Include wall-clock timings (makes outputs run-dependent).
    #[arg(long)]
    pub timings: bool,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

/// Parse arguments and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Build(a) => cmd_build(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Cluster(a) => cmd_cluster(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let code = exit_code(&e);
            report_error(&e, code);
            code
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e.root() {
        Error::Degenerate { .. } => EXIT_DEGENERATE,
        Error::NumericalFailure(_) | Error::InvalidState(_) => EXIT_NOT_CONVERGED,
        _ => EXIT_USAGE,
    }
}

fn report_error(e: &Error, code: i32) {
    let mut body = json!({
        "error": e.root().kind(),
        "message": e.to_string(),
        "exit_code": code,
    });
    if let Error::Stage { stage, .. } = e {
        body["stage"] = json!(stage);
    }
    if let Error::Degenerate { condition, .. } = e.root() {
        body["condition"] = json!(condition);
    }
    let _ = writeln!(std::io::stderr(), "{body}");
}

/// Rows of a points file plus the optional truth column.
#[derive(Clone, Debug, PartialEq)]
pub struct PointsTable {
    pub rows: Vec<Vec<f64>>,
    pub truth: Option<Vec<usize>>,
}

/// Read a points CSV: one point per row, optional header, optional integer
/// truth column (named `truth` in the header, or the last column when
/// `truth_last` is set).
pub fn read_points(path: &Path, truth_last: bool) -> Result<PointsTable> {
    let text = fs::read_to_string(path)?;
    parse_points(&text, truth_last)
}

pub fn parse_points(text: &str, truth_last: bool) -> Result<PointsTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        records.push(rec);
    }
    let mut truth_col = None;
    if let Some(first) = records.first() {
        if first.iter().any(|f| f.parse::<f64>().is_err()) {
            truth_col = first.iter().position(|f| f.eq_ignore_ascii_case("truth"));
            records.remove(0);
        }
    }
    if records.is_empty() {
        return Err(Error::Parse("no data rows".into()));
    }
    let width = records[0].len();
    if truth_last && truth_col.is_none() {
        if width < 2 {
            return Err(Error::Parse(
                "truth column needs at least one coordinate".into(),
            ));
        }
        truth_col = Some(width - 1);
    }
    let mut rows = Vec::with_capacity(records.len());
    let mut truth = truth_col.map(|_| Vec::with_capacity(records.len()));
    for (line, rec) in records.iter().enumerate() {
        if rec.len() != width {
            return Err(Error::Parse(format!(
                "row {} has {} fields, expected {width}",
                line + 1,
                rec.len()
            )));
        }
        let mut row = Vec::with_capacity(width);
        for (c, field) in rec.iter().enumerate() {
            if Some(c) == truth_col {
                let v = field.parse::<usize>().map_err(|_| {
                    Error::Parse(format!("row {}: bad truth label {field:?}", line + 1))
                })?;
                truth.as_mut().expect("truth column present").push(v);
            } else {
                let v = field
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("row {}: bad number {field:?}", line + 1)))?;
                if !v.is_finite() {
                    return Err(Error::Parse(format!("row {}: non-finite value", line + 1)));
                }
                row.push(v);
            }
        }
        rows.push(row);
    }
    Ok(PointsTable { rows, truth })
}

/// Write points (and optional extra columns) as CSV with a header.
pub fn write_points_csv(path: &Path, rows: &[Vec<f64>], truth: Option<&[usize]>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let n = rows.first().map_or(0, |r| r.len());
    let mut header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    if truth.is_some() {
        header.push("truth".into());
    }
    w.write_record(&header).map_err(csv_err)?;
    for (j, r) in rows.iter().enumerate() {
        let mut rec: Vec<String> = r.iter().map(|v| v.to_string()).collect();
        if let Some(t) = truth {
            rec.push(t[j].to_string());
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn to_value(v: &impl Serialize) -> Value {
    serde_json::to_value(v).expect("serializable report")
}

/// `Some(a)` when the set is `{0, a_1 e_1, ..., a_n e_n}` in any order.
fn simplex_scales(s: &PointSet) -> Option<Vec<f64>> {
    let n = s.n();
    if s.k() != n + 1 {
        return None;
    }
    let mut scales = vec![0.0; n];
    let mut origin = false;
    for p in s.points() {
        let nz: Vec<usize> = (0..n).filter(|&i| p[i] != 0.0).collect();
        match nz.as_slice() {
            [] => origin = true,
            [i] if scales[*i] == 0.0 => scales[*i] = p[*i],
            _ => return None,
        }
    }
    (origin && scales.iter().all(|a| *a != 0.0)).then_some(scales)
}

pub fn cmd_build(a: &BuildArgs) -> Result<i32> {
    let table = read_points(&a.input, false)?;
    let s = PointSet::from_rows(&table.rows)?;
    let g = solve_g(&s)?;
    let mut out = json!({
        "n": s.n(),
        "k": s.k(),
        "points": s.rows(),
        "generating_matrix": to_value(&g),
        "phi": g.describe(),
        "commutator_residual": g.commutator_residual().total,
    });
    if s.k() >= 2 {
        let tl = TransformedLoss::build(&s)?;
        out["transformed_loss"] = to_value(&tl);
        if let Some(text) = tl.describe() {
            out["closed_form"] = json!(text);
        }
    }
    if let Some(a) = simplex_scales(&s) {
        let loss = SimplicialLoss::new(DVector::from_vec(a.clone()))?;
        out["simplicial_loss"] = json!({ "scales": a, "closed_form": describe_simplicial(&loss) });
    }
    write_json(&a.output, &out)?;
    Ok(EXIT_OK)
}

fn fit_options(p: &PipelineArgs) -> Result<FitOptions> {
    let mut opts = match &p.config {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            serde_json::from_str::<FitOptions>(&text)
                .map_err(|e| Error::Parse(format!("config: {e}")))?
        }
        None => FitOptions::default(),
    };
    opts.seed = p.seed;
    opts.validate()?;
    Ok(opts)
}

fn non_convergence(message: String) -> i32 {
    report_error(&Error::NumericalFailure(message), EXIT_NOT_CONVERGED);
    EXIT_NOT_CONVERGED
}

pub fn cmd_fit(a: &FitArgs) -> Result<i32> {
    let opts = fit_options(&a.pipeline)?;
    let table = read_points(&a.input, false)?;
    let t = SampleSet::from_rows(&table.rows)?;
    let r = recover_set(&t, a.k, &opts, !a.pipeline.complex, a.pipeline.loss.into())?;
    let mut out = json!({
        "k": a.k,
        "samples": t.len(),
        "fit": to_value(&r.fit),
        "zeros": to_value(&r.zeros),
        "s_star": r.s_star.rows(),
        "loss": to_value(&r.loss),
        "warnings": r.warnings,
    });
    if let Some(path) = &a.truth_set {
        let truth = PointSet::from_rows(&read_points(path, false)?.rows)?;
        out["set_distance"] = json!(set_distance(&truth, &r.s_star)?);
        let max_loss = truth
            .points()
            .iter()
            .map(|u| loss_g(&r.fit.g_star, u.as_slice()).map(|e| e.value))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        out["max_loss_on_truth"] = json!(max_loss);
    }
    write_json(&a.output, &out)?;
    if r.fit.converged {
        Ok(EXIT_OK)
    } else {
        Ok(non_convergence(r.fit.warnings.join("; ")))
    }
}

/// Per-class means of samples, indexed by truth label.
fn class_means(t: &SampleSet, truth: &[usize], k: usize) -> Result<PointSet> {
    let mut sums = vec![DVector::zeros(t.n()); k];
    let mut counts = vec![0usize; k];
    for (v, &l) in t.samples().iter().zip(truth) {
        if l >= k {
            return Err(Error::invalid(format!(
                "truth label {l} out of range for k = {k}"
            )));
        }
        sums[l] += v;
        counts[l] += 1;
    }
    if counts.contains(&0) {
        return Err(Error::invalid("every truth label 0..k must occur"));
    }
    PointSet::new_unchecked(
        sums.into_iter()
            .zip(counts)
            .map(|(s, c)| s / c as f64)
            .collect(),
    )
}

pub fn cmd_cluster(a: &ClusterArgs) -> Result<i32> {
    let table = read_points(&a.input, a.truth)?;
    let t = SampleSet::from_rows(&table.rows)?;
    let choice: LossChoice = a.pipeline.loss.into();
    let mut converged_fit = true;
    let (s_star, loss) = match (&a.s_star, a.k) {
        (Some(path), _) => {
            let s = PointSet::from_rows(&read_points(path, false)?.rows)?;
            let loss = match choice {
                LossChoice::Transformed => RecoveryLoss::Transformed(TransformedLoss::build(&s)?),
                LossChoice::Fg => RecoveryLoss::Fg(solve_g(&s)?),
            };
            (s, loss)
        }
        (None, Some(k)) => {
            let opts = fit_options(&a.pipeline)?;
            let r = recover_set(&t, k, &opts, !a.pipeline.complex, choice)?;
            converged_fit = r.fit.converged;
            (r.s_star, r.loss)
        }
        (None, None) => return Err(Error::invalid("either --k or --s-star is required")),
    };
    let assign = assign_labels(&loss, &s_star, &t, a.threads.max(1))?;

    let mut w = csv::Writer::from_path(&a.output).map_err(csv_err)?;
    let mut header: Vec<String> = (1..=t.n()).map(|i| format!("x{i}")).collect();
    header.extend(["label".into(), "converged".into()]);
    if table.truth.is_some() {
        header.push("truth".into());
    }
    w.write_record(&header).map_err(csv_err)?;
    for j in 0..t.len() {
        let mut rec: Vec<String> = assign.points[j].iter().map(|v| v.to_string()).collect();
        rec.push(assign.labels[j].to_string());
        rec.push(assign.converged[j].to_string());
        if let Some(truth) = &table.truth {
            rec.push(truth[j].to_string());
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;

    let mut summary = json!({
        "samples": t.len(),
        "k": s_star.k(),
        "s_star": s_star.rows(),
        "non_converged": assign.non_converged(),
    });
    if let Some(truth) = &table.truth {
        let means = class_means(&t, truth, s_star.k())?;
        summary["accuracy"] = json!(accuracy(&assign.labels, truth, &s_star, &means)?);
    }
    if let Some(path) = &a.report {
        let mut report = summary.clone();
        report["assignment"] = to_value(&assign);
        write_json(path, &report)?;
    }
    println!("{summary}");
    if converged_fit {
        Ok(EXIT_OK)
    } else {
        Ok(non_convergence(
            "fit did not reach the commutator target".into(),
        ))
    }
}

fn median_spread(v: &[f64]) -> Value {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    if s.is_empty() {
        return json!(null);
    }
    let m = s.len() / 2;
    let median = if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    };
    json!({ "median": median, "min": s[0], "max": s[s.len() - 1] })
}

/// Layered plot data: samples, true set and recovered set.
fn write_layers(path: &Path, t: &SampleSet, s: &PointSet, s_star: &PointSet) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header = vec!["layer".to_string()];
    header.extend((1..=t.n()).map(|i| format!("x{i}")));
    w.write_record(&header).map_err(csv_err)?;
    let layers: [(&str, &[DVector<f64>]); 3] = [
        ("T", t.samples()),
        ("S", s.points()),
        ("S*", s_star.points()),
    ];
    for (name, pts) in layers {
        for p in pts {
            let mut rec = vec![name.to_string()];
            rec.extend(p.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// The six-point configuration used by the noisy-recovery scenarios.
pub fn hexagon_set() -> PointSet {
    PointSet::from_rows(&[
        vec![1.0, 1.0],
        vec![3.0, 2.0],
        vec![1.5, 2.5],
        vec![2.5, 3.0],
        vec![2.0, 1.5],
        vec![3.0, 1.0],
    ])
    .expect("distinct points")
}

pub fn cmd_bench(a: &BenchArgs) -> Result<i32> {
    if a.seeds == 0 {
        return Err(Error::invalid("--seeds must be positive"));
    }
    fs::create_dir_all(&a.output)?;
    let base = fit_options(&a.pipeline)?;
    let noise = match a.noise {
        NoiseArg::Uniform => NoiseModel::Uniform,
        NoiseArg::TruncatedNormal => NoiseModel::TruncatedNormal,
    };
    let mut all_converged = true;
    let summary = match a.scenario {
        Scenario::Table1 | Scenario::Example62 => {
            let s = hexagon_set();
            let cells: Vec<(String, Vec<f64>, Vec<usize>)> = match a.scenario {
                Scenario::Table1 => {
                    let counts = a.counts.clone().unwrap_or_else(|| vec![50]);
                    let eps = a.eps.clone().unwrap_or_else(|| vec![0.05, 0.1, 0.5]);
                    counts
                        .iter()
                        .flat_map(|&c| {
                            eps.iter()
                                .map(move |&e| (format!("{c}|{e}"), vec![e; 6], vec![c; 6]))
                        })
                        .collect()
                }
                _ => vec![(
                    "uneven".into(),
                    vec![0.4, 0.2, 0.6, 0.2, 0.32, 0.4],
                    vec![50, 25, 100, 30, 40, 70],
                )],
            };
            let file = if a.scenario == Scenario::Table1 {
                "table1.csv"
            } else {
                "example62.csv"
            };
            let mut w = csv::Writer::from_path(a.output.join(file)).map_err(csv_err)?;
            w.write_record([
                "cell",
                "seed",
                "set_distance",
                "max_loss",
                "converged",
                "time_s",
            ])
            .map_err(csv_err)?;
            let mut rows = Vec::new();
            for (ci, (label, radii, counts)) in cells.iter().enumerate() {
                let (mut dists, mut losses) = (Vec::new(), Vec::new());
                for seed in 0..a.seeds {
                    let master = sub_seed(base.seed, seed);
                    let (t, _) = bounded_noise_sample_radii(
                        &s,
                        radii,
                        counts,
                        sub_seed(master, ci as u64),
                        noise,
                    )?;
                    let opts = FitOptions {
                        seed: master,
                        ..base.clone()
                    };
                    let r = recover_set(&t, 6, &opts, !a.pipeline.complex, a.pipeline.loss.into())?;
                    all_converged &= r.fit.converged;
                    let d = set_distance(&s, &r.s_star)?;
                    let ml = s
                        .points()
                        .iter()
                        .map(|u| loss_g(&r.fit.g_star, u.as_slice()).map(|e| e.value))
                        .collect::<Result<Vec<f64>>>()?
                        .into_iter()
                        .fold(0.0, f64::max);
                    let time = r.timings.fit_s + r.timings.extract_s + r.timings.loss_s;
                    w.write_record([
                        label.clone(),
                        seed.to_string(),
                        d.to_string(),
                        ml.to_string(),
                        r.fit.converged.to_string(),
                        if a.timings {
                            time.to_string()
                        } else {
                            String::new()
                        },
                    ])
                    .map_err(csv_err)?;
                    let tag = label.replace('|', "_");
                    write_layers(
                        &a.output.join(format!("layers_{tag}_seed{seed}.csv")),
                        &t,
                        &s,
                        &r.s_star,
                    )?;
                    dists.push(d);
                    losses.push(ml);
                }
                rows.push(json!({
                    "cell": label,
                    "radii": radii,
                    "counts": counts,
                    "set_distance": median_spread(&dists),
                    "max_loss": median_spread(&losses),
                }));
            }
            w.flush()?;
            json!({ "scenario": format!("{:?}", a.scenario).to_lowercase(), "seeds": a.seeds, "cells": rows })
        }
        Scenario::Gmm => {
            let mut w = csv::Writer::from_path(a.output.join("gmm.csv")).map_err(csv_err)?;
            w.write_record([
                "n",
                "k",
                "diagonal",
                "seed",
                "accuracy",
                "non_converged",
                "time_s",
            ])
            .map_err(csv_err)?;
            let mut cells = Vec::new();
            for diagonal in [true, false] {
                let mut accs = Vec::new();
                for seed in 0..a.seeds {
                    let master = sub_seed(base.seed, seed);
                    let spec = random_gmm(
                        a.n,
                        a.k,
                        diagonal,
                        6.0,
                        sub_seed(master, 2 + diagonal as u64),
                    )?;
                    let (t, truth) = gmm_sample(&spec, a.samples, sub_seed(master, 4))?;
                    let opts = FitOptions {
                        seed: master,
                        ..base.clone()
                    };
                    let clock = std::time::Instant::now();
                    let r = recover_set(&t, a.k, &opts, true, LossChoice::Transformed)?;
                    all_converged &= r.fit.converged;
                    let assign = assign_labels(&r.loss, &r.s_star, &t, a.threads.max(1))?;
                    let acc = accuracy(&assign.labels, &truth, &r.s_star, &spec.means())?;
                    let time = clock.elapsed().as_secs_f64();
                    w.write_record([
                        a.n.to_string(),
                        a.k.to_string(),
                        diagonal.to_string(),
                        seed.to_string(),
                        acc.to_string(),
                        assign.non_converged().to_string(),
                        if a.timings {
                            time.to_string()
                        } else {
                            String::new()
                        },
                    ])
                    .map_err(csv_err)?;
                    accs.push(acc);
                }
                cells.push(json!({ "diagonal": diagonal, "accuracy": median_spread(&accs) }));
            }
            w.flush()?;
            json!({ "scenario": "gmm", "n": a.n, "k": a.k, "samples": a.samples, "seeds": a.seeds, "cells": cells })
        }
    };
    write_json(&a.output.join("summary.json"), &summary)?;
    if all_converged {
        Ok(EXIT_OK)
    } else {
        Ok(non_convergence(
            "some fits did not reach the commutator target".into(),
        ))
    }
}
