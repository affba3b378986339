//! Executes an experiment: every sweep point times every (graph, split) run,
//! each run evaluating all configured methods on the same graph and split.
//!
//! Seeds are derived from the master seed with independent streams, so a run's
//! randomness depends only on its indices:
//! - graph `g`: `derive(derive(master, 0), g)`, shared by all sweep points so that
//!   points differ only in the swept parameter;
//! - split, training and baseline k-means of run `r`: `derive(derive(master, s), r)`
//!   for streams `s = 1, 2, 3`.
//!
//! Each finished run is written to `runs/pXXX_rYYY.json` right away; `--resume`
//! reloads successful ones instead of recomputing them.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sssnet::metrics::{ari, bnc_value, nmi, unhappy_ratio};
use sssnet::model::{checkpoint, ModelConfig, PreparedChannels};
use sssnet::rng::{derive_seed, seeded};
use sssnet::spectral::{baseline_cluster, input_features, FeatureMode};
use sssnet::synth::{sample_polarized, sample_ssbm};
use sssnet::train::{make_split, train, Split, SplitFractions, TrainConfig};
use sssnet::SignedGraph;

use crate::config::{DataSource, ExperimentConfig, Method};
use crate::dataset::{load_dataset, Dataset};
use crate::error::{io_err, BenchError, Result};
use crate::report::{summarize, SummaryRow};

const STREAM_GRAPH: u64 = 0;
const STREAM_SPLIT: u64 = 1;
const STREAM_TRAIN: u64 = 2;
const STREAM_BASELINE: u64 = 3;

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Reuse successful runs already on disk.
    pub resume: bool,
    /// Suppress progress lines on stderr.
    pub quiet: bool,
}

/// Scores of one method on one run. Label-based fields are empty for unlabeled
/// data; `error` is set when the method failed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: Method,
    pub error: Option<String>,
    pub test_ari: Option<f64>,
    pub test_nmi: Option<f64>,
    pub val_ari: Option<f64>,
    pub train_ari: Option<f64>,
    pub all_ari: Option<f64>,
    pub unhappy_ratio: Option<f64>,
    pub bnc_value: Option<f64>,
    pub epochs: Option<usize>,
    pub best_epoch: Option<usize>,
    pub wall_secs: f64,
}

impl MethodResult {
    fn failed(method: Method, error: String, wall_secs: f64) -> Self {
        Self {
            method,
            error: Some(error),
            test_ari: None,
            test_nmi: None,
            val_ari: None,
            train_ari: None,
            all_ari: None,
            unhappy_ratio: None,
            bnc_value: None,
            epochs: None,
            best_epoch: None,
            wall_secs,
        }
    }

    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub point: usize,
    pub sweep_value: Option<f64>,
    pub run: usize,
    pub graph: usize,
    pub split: usize,
    pub nodes: usize,
    pub edges: usize,
    /// Failure before any method ran (data generation or split).
    pub error: Option<String>,
    pub methods: Vec<MethodResult>,
}

impl RunOutcome {
    pub fn succeeded(&self) -> bool {
        self.error.is_none() && self.methods.iter().all(MethodResult::ok)
    }

    pub fn result(&self, method: Method) -> Option<&MethodResult> {
        self.methods.iter().find(|m| m.method == method)
    }
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub config: ExperimentConfig,
    /// Ordered by sweep point, then run index.
    pub runs: Vec<RunOutcome>,
    pub summary: Vec<SummaryRow>,
}

impl RunReport {
    pub fn all_succeeded(&self) -> bool {
        self.runs.iter().all(RunOutcome::succeeded)
    }

    pub fn failed_runs(&self) -> usize {
        self.runs.iter().filter(|r| !r.succeeded()).count()
    }

    /// Per-run values of one metric for one method at one sweep point, skipping
    /// failures and missing values.
    pub fn values(&self, point: usize, method: Method, metric: impl Fn(&MethodResult) -> Option<f64>) -> Vec<f64> {
        self.runs
            .iter()
            .filter(|r| r.point == point)
            .filter_map(|r| r.result(method))
            .filter(|m| m.ok())
            .filter_map(metric)
            .collect()
    }

    pub fn summary_row(&self, point: usize, method: Method) -> Option<&SummaryRow> {
        self.summary.iter().find(|s| s.point == point && s.method == method)
    }
}

/// Seed of generated graph `graph`; every sweep point reuses it.
pub fn graph_seed(master: u64, graph: usize) -> u64 {
    derive_seed(derive_seed(master, STREAM_GRAPH), graph as u64)
}

fn run_file(dir: &Path, point: usize, run: usize) -> PathBuf {
    dir.join("runs").join(format!("p{point:03}_r{run:03}.json"))
}

fn artifact(dir: &Path, point: usize, run: usize, name: &str) -> PathBuf {
    dir.join("runs").join(format!("p{point:03}_r{run:03}_{name}"))
}

/// Writes through a temporary file so a crash never leaves a truncated file.
pub(crate) fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn load_finished(path: &Path) -> Option<RunOutcome> {
    let text = fs::read_to_string(path).ok()?;
    let outcome: RunOutcome = serde_json::from_str(&text).ok()?;
    outcome.succeeded().then_some(outcome)
}

/// Runs every pending run of the experiment and writes per-run files plus
/// `config.json`. Table outputs come from [`crate::report::emit_outputs`].
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunReport> {
    cfg.validate()?;
    // Load before touching the output directory so bad input leaves nothing behind.
    let dataset = match &cfg.data {
        DataSource::Files(src) => Some(load_dataset(src)?),
        _ => None,
    };
    let out = &cfg.output_dir;
    fs::create_dir_all(out.join("runs")).map_err(io_err(out))?;
    let config_path = out.join("config.json");
    let config_text = cfg.to_json();
    if opts.resume {
        if let Ok(existing) = fs::read_to_string(&config_path) {
            // Worker count never changes results, so it may differ.
            let same = ExperimentConfig::from_json(&existing, &config_path).is_ok_and(|old| ExperimentConfig { workers: cfg.workers, ..old } == *cfg);
            if !same {
                return Err(BenchError::ConfigChanged(out.clone()));
            }
        }
    }
    write_atomic(&config_path, &config_text)?;

    let mut tasks = Vec::new();
    let mut finished = Vec::new();
    for (point, value) in cfg.points().into_iter().enumerate() {
        let point_cfg = cfg.at_point(value)?;
        for run in 0..cfg.runs_per_point() {
            match opts.resume.then(|| load_finished(&run_file(out, point, run))).flatten() {
                Some(done) => finished.push(done),
                None => tasks.push((point, value, run, point_cfg.clone())),
            }
        }
    }

    let total = tasks.len();
    let workers = cfg
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .clamp(1, total.max(1));
    let next = AtomicUsize::new(0);
    let done = AtomicUsize::new(0);
    let results = Mutex::new(Vec::with_capacity(total));
    let write_errors = Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some((point, value, run, point_cfg)) = tasks.get(i) else {
                    break;
                };
                let outcome = execute_run(point_cfg, *point, *value, *run, dataset.as_ref());
                let text = serde_json::to_string_pretty(&outcome).expect("outcome serializes");
                if let Err(e) = write_atomic(&run_file(out, *point, *run), &text) {
                    write_errors.lock().unwrap().push(e);
                }
                let k = done.fetch_add(1, Ordering::SeqCst) + 1;
                if !opts.quiet {
                    let status = if outcome.succeeded() { "ok" } else { "FAILED" };
                    let secs: f64 = outcome.methods.iter().map(|m| m.wall_secs).sum();
                    eprintln!("[{k}/{total}] point {point} run {run}: {status} ({secs:.1}s)");
                }
                results.lock().unwrap().push(outcome);
            });
        }
    });
    if let Some(e) = write_errors.into_inner().unwrap().into_iter().next() {
        return Err(e);
    }
    let mut runs = results.into_inner().unwrap();
    runs.extend(finished);
    runs.sort_by_key(|r| (r.point, r.run));
    let summary = summarize(cfg, &runs);
    Ok(RunReport {
        config: cfg.clone(),
        runs,
        summary,
    })
}

struct RunData {
    graph: SignedGraph,
    labels: Option<Vec<usize>>,
    attributes: Option<Array2<f64>>,
    num_clusters: usize,
}

fn run_data(cfg: &ExperimentConfig, graph_seed: u64, dataset: Option<&Dataset>) -> Result<RunData> {
    if let Some(p) = cfg.data.ssbm_params(graph_seed) {
        let lg = sample_ssbm(&p)?;
        return Ok(RunData {
            num_clusters: lg.num_clusters,
            graph: lg.graph,
            labels: Some(lg.labels),
            attributes: None,
        });
    }
    if let Some(p) = cfg.data.polarized_params(graph_seed) {
        let lg = sample_polarized(&p)?.labeled;
        return Ok(RunData {
            num_clusters: lg.num_clusters,
            graph: lg.graph,
            labels: Some(lg.labels),
            attributes: None,
        });
    }
    let d = dataset.ok_or_else(|| BenchError::Config("file data source without a loaded dataset".into()))?;
    let num_clusters = cfg
        .num_clusters
        .or(d.num_clusters)
        .ok_or_else(|| BenchError::Config("cluster count unknown".into()))?;
    Ok(RunData {
        graph: d.graph.clone(),
        labels: d.labels.clone(),
        attributes: d.attributes.clone(),
        num_clusters,
    })
}

fn execute_run(cfg: &ExperimentConfig, point: usize, value: Option<f64>, run: usize, dataset: Option<&Dataset>) -> RunOutcome {
    let graph_idx = run / cfg.splits_per_graph;
    let mut outcome = RunOutcome {
        point,
        sweep_value: value,
        run,
        graph: graph_idx,
        split: run % cfg.splits_per_graph,
        nodes: 0,
        edges: 0,
        error: None,
        methods: Vec::new(),
    };
    let stream = |s: u64, i: usize| derive_seed(derive_seed(cfg.seed, s), i as u64);
    let graph_seed = graph_seed(cfg.seed, graph_idx);

    let prepared = catch_unwind(AssertUnwindSafe(|| -> Result<(RunData, Split)> {
        let data = run_data(cfg, graph_seed, dataset)?;
        let split = match &data.labels {
            Some(l) => make_split(
                l,
                SplitFractions {
                    test: cfg.test_fraction,
                    val: cfg.val_fraction,
                },
                cfg.seed_ratio,
                &mut seeded(stream(STREAM_SPLIT, run)),
            )?,
            None => Split {
                train: (0..data.graph.n()).collect(),
                val: Vec::new(),
                test: Vec::new(),
                seeds: Vec::new(),
            },
        };
        Ok((data, split))
    }));
    let (data, split) = match prepared {
        Ok(Ok(v)) => v,
        Ok(Err(e)) => {
            outcome.error = Some(e.to_string());
            return outcome;
        }
        Err(panic) => {
            outcome.error = Some(panic_message(panic));
            return outcome;
        }
    };
    outcome.nodes = data.graph.n();
    outcome.edges = data.graph.num_edges();

    for &method in &cfg.methods {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(|| match method {
            Method::Sssnet => run_sssnet(cfg, &data, &split, graph_seed, stream(STREAM_TRAIN, run), point, run),
            Method::Baseline(b) => {
                let pred = baseline_cluster(&data.graph, data.num_clusters, b, &mut seeded(stream(STREAM_BASELINE, run)))?;
                score(method, &pred, &data, &split)
            }
        }));
        let secs = start.elapsed().as_secs_f64();
        let mut r = match result {
            Ok(Ok(r)) => r,
            Ok(Err(e)) => MethodResult::failed(method, e.to_string(), secs),
            Err(panic) => MethodResult::failed(method, panic_message(panic), secs),
        };
        r.wall_secs = secs;
        outcome.methods.push(r);
    }
    outcome
}

fn run_sssnet(cfg: &ExperimentConfig, data: &RunData, split: &Split, feature_seed: u64, train_seed: u64, point: usize, run: usize) -> Result<MethodResult> {
    let x = match &data.attributes {
        Some(a) => a.clone(),
        None => {
            let mode = if cfg.data.is_synthetic() {
                FeatureMode::Synthetic
            } else {
                FeatureMode::Real
            };
            input_features(&data.graph, data.num_clusters, mode, feature_seed)?
        }
    };
    let model_cfg = ModelConfig {
        d_in: x.ncols(),
        hidden: cfg.model.hidden,
        num_clusters: data.num_clusters,
        hop: cfg.model.hop,
        directed: data.graph.is_directed(),
        balance: cfg.model.balance,
    };
    let train_cfg = TrainConfig {
        seed: train_seed,
        ..cfg.train.clone()
    };
    let trained = train(&data.graph, &x, split, data.labels.as_deref(), model_cfg, &train_cfg)?;
    let channels = PreparedChannels::from_graph(&data.graph, train_cfg.tau_pos, train_cfg.tau_neg)?;
    let pred = trained.model.predict(&x, &channels)?.labels;

    let out = &cfg.output_dir;
    write_atomic(&artifact(out, point, run, "SSSNET_history.csv"), &trained.history.to_csv())?;
    if cfg.save_models {
        checkpoint::save(&trained.model, &artifact(out, point, run, "SSSNET_model.json"))?;
    }
    let mut r = score(Method::Sssnet, &pred, data, split)?;
    r.epochs = Some(trained.history.records.len());
    r.best_epoch = Some(trained.history.best_epoch);
    if trained.history.diverged {
        r.error = Some(format!("training diverged after {} epochs", trained.history.records.len()));
    }
    Ok(r)
}

fn subset_scores(pred: &[usize], labels: &[usize], nodes: &[usize]) -> Result<(Option<f64>, Option<f64>)> {
    if nodes.len() < 2 {
        return Ok((None, None));
    }
    let a: Vec<usize> = nodes.iter().map(|&i| pred[i]).collect();
    let b: Vec<usize> = nodes.iter().map(|&i| labels[i]).collect();
    Ok((Some(ari(&a, &b)?), Some(nmi(&a, &b)?)))
}

/// Label scores on the split's node sets; structural scores on all nodes.
fn score(method: Method, pred: &[usize], data: &RunData, split: &Split) -> Result<MethodResult> {
    let mut r = MethodResult::failed(method, String::new(), 0.0);
    r.error = None;
    if let Some(l) = &data.labels {
        (r.test_ari, r.test_nmi) = subset_scores(pred, l, &split.test)?;
        r.val_ari = subset_scores(pred, l, &split.val)?.0;
        r.train_ari = subset_scores(pred, l, &split.train)?.0;
        r.all_ari = Some(ari(pred, l)?);
    }
    if data.graph.num_edges() > 0 {
        r.unhappy_ratio = Some(unhappy_ratio(&data.graph, pred)?);
    }
    r.bnc_value = Some(bnc_value(&data.graph, pred)?);
    Ok(r)
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    let msg = p
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".into());
    format!("panic: {msg}")
}
