//! Aggregates and output files: `results.csv`, `summary.csv`, `series.json`,
//! `timings.csv` and the `config.json` echo.

use std::fmt::Write as _;
use std::fs;

use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Method};
use crate::error::{io_err, Result};
use crate::runner::{write_atomic, MethodResult, RunOutcome, RunReport};

/// Metrics aggregated per method and sweep point.
pub const METRICS: [&str; 5] = ["test_ari", "test_nmi", "all_ari", "unhappy_ratio", "bnc_value"];

pub fn metric(r: &MethodResult, name: &str) -> Option<f64> {
    match name {
        "test_ari" => r.test_ari,
        "test_nmi" => r.test_nmi,
        "val_ari" => r.val_ari,
        "train_ari" => r.train_ari,
        "all_ari" => r.all_ari,
        "unhappy_ratio" => r.unhappy_ratio,
        "bnc_value" => r.bnc_value,
        _ => None,
    }
}

/// Mean and standard error (sample standard deviation over `sqrt(count)`).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: Option<f64>,
    pub se: Option<f64>,
}

impl Stat {
    pub fn of(values: &[f64]) -> Stat {
        let n = values.len();
        if n == 0 {
            return Stat::default();
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let se = (n > 1).then(|| {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        });
        Stat { mean: Some(mean), se }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub point: usize,
    pub sweep_value: Option<f64>,
    /// Successful runs entering the aggregates.
    pub runs: usize,
    pub failed: usize,
    /// In [`METRICS`] order.
    pub stats: Vec<Stat>,
}

impl SummaryRow {
    pub fn stat(&self, name: &str) -> Stat {
        METRICS.iter().position(|m| *m == name).map(|i| self.stats[i]).unwrap_or_default()
    }
}

pub fn summarize(cfg: &ExperimentConfig, runs: &[RunOutcome]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for (point, value) in cfg.points().into_iter().enumerate() {
        let at_point: Vec<&RunOutcome> = runs.iter().filter(|r| r.point == point).collect();
        for &method in &cfg.methods {
            let ok: Vec<&MethodResult> = at_point.iter().filter_map(|r| r.result(method)).filter(|m| m.ok()).collect();
            let stats = METRICS
                .iter()
                .map(|name| Stat::of(&ok.iter().filter_map(|r| metric(r, name)).collect::<Vec<_>>()))
                .collect();
            rows.push(SummaryRow {
                method,
                point,
                sweep_value: value,
                runs: ok.len(),
                failed: at_point.len() - ok.len(),
                stats,
            });
        }
    }
    rows
}

fn cell<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const RESULTS_HEADER: &str =
    "point,sweep_value,run,graph,split,method,status,test_ari,test_nmi,val_ari,train_ari,all_ari,unhappy_ratio,bnc_value,epochs,best_epoch,nodes,edges";

/// One row per run and method. Wall times are kept out so the file is
/// reproducible byte for byte; they go to `timings.csv`.
pub fn results_csv(report: &RunReport) -> String {
    let mut s = String::from(RESULTS_HEADER);
    s.push('\n');
    for r in &report.runs {
        for &method in &report.config.methods {
            let m = r.result(method);
            let status = match m {
                Some(m) if m.ok() && r.error.is_none() => "ok",
                _ => "error",
            };
            let f = |name: &str| cell(m.and_then(|m| metric(m, name)));
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.point,
                cell(r.sweep_value),
                r.run,
                r.graph,
                r.split,
                method,
                status,
                f("test_ari"),
                f("test_nmi"),
                f("val_ari"),
                f("train_ari"),
                f("all_ari"),
                f("unhappy_ratio"),
                f("bnc_value"),
                cell(m.and_then(|m| m.epochs)),
                cell(m.and_then(|m| m.best_epoch)),
                r.nodes,
                r.edges
            );
        }
    }
    s
}

pub fn summary_header() -> String {
    let mut s = String::from("method,sweep_value,mean_test_ari,se_test_ari,runs,failed");
    for m in &METRICS[1..] {
        let _ = write!(s, ",mean_{m},se_{m}");
    }
    s
}

pub fn summary_csv(report: &RunReport) -> String {
    let mut s = summary_header();
    s.push('\n');
    for row in &report.summary {
        let ari = row.stats[0];
        let _ = write!(
            s,
            "{},{},{},{},{},{}",
            row.method,
            cell(row.sweep_value),
            cell(ari.mean),
            cell(ari.se),
            row.runs,
            row.failed
        );
        for st in &row.stats[1..] {
            let _ = write!(s, ",{},{}", cell(st.mean), cell(st.se));
        }
        s.push('\n');
    }
    s
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub method: String,
    pub metric: String,
    pub x: Vec<f64>,
    pub y: Vec<Option<f64>>,
    pub err: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesFile {
    /// Swept parameter, if any; without a sweep `x` holds the single value 0.
    pub axis: Option<String>,
    pub series: Vec<Series>,
}

pub fn series(report: &RunReport) -> SeriesFile {
    let cfg = &report.config;
    let mut out = Vec::new();
    for &method in &cfg.methods {
        for name in METRICS {
            let rows: Vec<&SummaryRow> = report.summary.iter().filter(|r| r.method == method).collect();
            out.push(Series {
                method: method.to_string(),
                metric: name.to_string(),
                x: rows.iter().map(|r| r.sweep_value.unwrap_or(0.0)).collect(),
                y: rows.iter().map(|r| r.stat(name).mean).collect(),
                err: rows.iter().map(|r| r.stat(name).se).collect(),
            });
        }
    }
    SeriesFile {
        axis: cfg.sweep.as_ref().map(|s| s.axis.name().to_string()),
        series: out,
    }
}

pub fn timings_csv(report: &RunReport) -> String {
    let mut s = String::from("point,run,method,wall_secs\n");
    for r in &report.runs {
        for m in &r.methods {
            let _ = writeln!(s, "{},{},{},{}", r.point, r.run, m.method, m.wall_secs);
        }
    }
    s
}

/// Failure messages, one line per failed run or method.
pub fn errors_log(report: &RunReport) -> String {
    let mut s = String::new();
    for r in &report.runs {
        if let Some(e) = &r.error {
            let _ = writeln!(s, "point {} run {}: {}", r.point, r.run, e);
        }
        for m in &r.methods {
            if let Some(e) = &m.error {
                let _ = writeln!(s, "point {} run {} {}: {}", r.point, r.run, m.method, e);
            }
        }
    }
    s
}

/// Writes every table into the configured output directory.
pub fn emit_outputs(report: &RunReport) -> Result<()> {
    let dir = &report.config.output_dir;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_atomic(&dir.join("config.json"), &report.config.to_json())?;
    write_atomic(&dir.join("results.csv"), &results_csv(report))?;
    write_atomic(&dir.join("summary.csv"), &summary_csv(report))?;
    let json = serde_json::to_string_pretty(&series(report)).expect("series serializes");
    write_atomic(&dir.join("series.json"), &json)?;
    write_atomic(&dir.join("timings.csv"), &timings_csv(report))?;
    let errors = errors_log(report);
    let err_path = dir.join("errors.log");
    if errors.is_empty() {
        if err_path.exists() {
            fs::remove_file(&err_path).map_err(io_err(&err_path))?;
        }
    } else {
        write_atomic(&err_path, &errors)?;
    }
    Ok(())
}
