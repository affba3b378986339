use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sssnet::io::{write_edge_list, write_labels};
use sssnet::synth::{sample_polarized, sample_ssbm};
use sssnet_bench::{
    emit_outputs, run_experiment, BenchError, DataSource, ExperimentConfig, FileSource, Method, Result, RunOptions, Sweep, SweepAxis,
};

#[derive(Parser)]
#[command(name = "sssnet", version, about = "Signed network clustering experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a synthetic graph and write `graph.tsv` plus `labels.tsv`.
    Generate(GenerateArgs),
    /// Run every configured method over repeated graphs and splits.
    Run(RunArgs),
    /// Like `run`, repeated at every value of one parameter.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Generator {
    Ssbm,
    Polarized,
}

/// Generator parameters; unset values keep the model's defaults.
#[derive(Args, Clone, Debug, Default)]
struct DataArgs {
    /// Synthetic model to sample from.
    #[arg(long, value_enum)]
    model: Option<Generator>,
    #[arg(long)]
    n: Option<usize>,
    /// Clusters (SSBM) or cluster count for unlabeled files.
    #[arg(long = "K")]
    k: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    /// Number of polarized communities.
    #[arg(long)]
    r: Option<usize>,
    /// Default polarized community size.
    #[arg(long = "N")]
    community_size: Option<usize>,
}

#[derive(Args, Clone, Debug, Default)]
struct ExperimentArgs {
    /// JSON experiment config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
    /// Edge list (`src<TAB>dst<TAB>weight`).
    #[arg(long, conflicts_with = "correlation")]
    edges: Option<PathBuf>,
    /// Dense correlation matrix CSV.
    #[arg(long)]
    correlation: Option<PathBuf>,
    /// `node<TAB>cluster` ground truth for loaded data.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Node attribute CSV, one row per node.
    #[arg(long)]
    attributes: Option<PathBuf>,
    /// Read the edge list as directed.
    #[arg(long)]
    directed: bool,
    /// Drop nodes with fewer neighbors than this.
    #[arg(long)]
    min_degree: Option<usize>,
    #[arg(long)]
    hop: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    /// Self-loop weight added before row normalization.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    gamma_s: Option<f64>,
    #[arg(long)]
    gamma_t: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    seed_ratio: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    /// Comma-separated methods; `all` and `baselines` expand.
    #[arg(long)]
    method: Option<String>,
    /// Total runs per point.
    #[arg(long)]
    runs: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Use the triplet hinge with the literal similarity order.
    #[arg(long)]
    triplet_literal: bool,
    /// Add the balance-theory terms to the aggregation.
    #[arg(long)]
    balance_variant: bool,
    /// Train without the PBNC term (needs seed labels).
    #[arg(long)]
    no_pbnc: bool,
    #[arg(long)]
    save_models: bool,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Skip runs already finished in the output directory.
    #[arg(long)]
    resume: bool,
    /// No per-run progress lines.
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    /// Parameter to vary (eta, p, rho, n, seed-ratio, hop, hidden, gamma-s,
    /// gamma-t, alpha, lr, tau).
    #[arg(long, default_value = "eta")]
    axis: String,
    /// Comma-separated values; defaults to the eta grid.
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

impl DataArgs {
    fn any_set(&self) -> bool {
        self.model.is_some()
            || self.n.is_some()
            || self.p.is_some()
            || self.rho.is_some()
            || self.eta.is_some()
            || self.r.is_some()
            || self.community_size.is_some()
    }

    /// Applies the generator flags to `data`, switching model when asked.
    fn apply(&self, data: &mut DataSource) -> Result<()> {
        match self.model {
            Some(Generator::Ssbm) if !matches!(data, DataSource::Ssbm { .. }) => *data = DataSource::default_ssbm(),
            Some(Generator::Polarized) if !matches!(data, DataSource::Polarized { .. }) => *data = DataSource::default_polarized(),
            None if self.r.is_some() || self.community_size.is_some() => {
                if !matches!(data, DataSource::Polarized { .. }) {
                    *data = DataSource::default_polarized();
                }
            }
            _ => {}
        }
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        match data {
            DataSource::Ssbm { n, k, p, rho, eta } => {
                if self.r.is_some() || self.community_size.is_some() {
                    return Err(BenchError::Config("--r and --N apply to the polarized model".into()));
                }
                *n = self.n.unwrap_or(*n);
                *k = self.k.unwrap_or(*k);
                set(p, self.p);
                set(rho, self.rho);
                set(eta, self.eta);
            }
            DataSource::Polarized {
                n,
                r,
                p,
                rho,
                eta,
                community_size,
            } => {
                if self.k.is_some() {
                    return Err(BenchError::Config("the polarized model fixes K = 2r + 1; use --r".into()));
                }
                *n = self.n.unwrap_or(*n);
                *r = self.r.unwrap_or(*r);
                *community_size = self.community_size.unwrap_or(*community_size);
                set(p, self.p);
                set(rho, self.rho);
                set(eta, self.eta);
            }
            DataSource::Files(_) => {
                if self.any_set() {
                    return Err(BenchError::Config("generator flags cannot be combined with input files".into()));
                }
            }
        }
        Ok(())
    }
}

impl ExperimentArgs {
    fn build(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if self.edges.is_some() || self.correlation.is_some() {
            cfg.data = DataSource::Files(FileSource {
                edges: self.edges.clone(),
                correlation: self.correlation.clone(),
                labels: self.labels.clone(),
                attributes: self.attributes.clone(),
                directed: self.directed,
                min_degree: self.min_degree,
            });
            cfg.num_clusters = self.data.k.or(cfg.num_clusters);
        } else if let DataSource::Files(src) = &mut cfg.data {
            if self.labels.is_some() {
                src.labels = self.labels.clone();
            }
            if self.attributes.is_some() {
                src.attributes = self.attributes.clone();
            }
            if self.min_degree.is_some() {
                src.min_degree = self.min_degree;
            }
            src.directed |= self.directed;
            cfg.num_clusters = self.data.k.or(cfg.num_clusters);
        } else if self.labels.is_some() || self.attributes.is_some() || self.min_degree.is_some() {
            return Err(BenchError::Config("--labels, --attributes and --min-degree need --edges or --correlation".into()));
        } else if self.directed {
            return Err(BenchError::Config("generated graphs are undirected; --directed applies to --edges".into()));
        }
        let mut data_flags = self.data.clone();
        if matches!(cfg.data, DataSource::Files(_)) {
            data_flags.k = None;
        }
        data_flags.apply(&mut cfg.data)?;

        if let Some(v) = self.hop {
            cfg.model.hop = v;
        }
        if let Some(v) = self.hidden {
            cfg.model.hidden = v;
        }
        cfg.model.balance |= self.balance_variant;
        let t = &mut cfg.train;
        let pairs = [
            (&mut t.tau_pos, self.tau),
            (&mut t.gamma_s, self.gamma_s),
            (&mut t.gamma_t, self.gamma_t),
            (&mut t.alpha, self.alpha),
            (&mut t.lr, self.lr),
        ];
        for (slot, v) in pairs {
            if let Some(v) = v {
                *slot = v;
            }
        }
        if let Some(v) = self.epochs {
            t.max_epochs = v;
        }
        if let Some(v) = self.patience {
            t.patience = v;
        }
        t.triplet_literal |= self.triplet_literal;
        if self.no_pbnc {
            t.use_pbnc = false;
        }
        if let Some(v) = self.seed_ratio {
            cfg.seed_ratio = v;
        }
        if let Some(m) = &self.method {
            cfg.methods = Method::parse_list(m)?;
        }
        if let Some(r) = self.runs {
            cfg.set_runs(r);
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        if self.workers.is_some() {
            cfg.workers = self.workers;
        }
        cfg.save_models |= self.save_models;
        Ok(cfg)
    }
}

fn execute(cfg: ExperimentConfig, exp: &ExperimentArgs) -> Result<bool> {
    let opts = RunOptions {
        resume: exp.resume,
        quiet: exp.quiet,
    };
    let report = run_experiment(&cfg, &opts)?;
    emit_outputs(&report)?;
    for row in &report.summary {
        let ari = row.stat("test_ari");
        let value = row.sweep_value.map(|v| format!(" @ {v:?}")).unwrap_or_default();
        match (ari.mean, ari.se) {
            (Some(m), Some(se)) => println!("{}{value}: test ARI {m:.4} ± {se:.4} over {} runs", row.method, row.runs),
            (Some(m), None) => println!("{}{value}: test ARI {m:.4} over {} runs", row.method, row.runs),
            (None, _) => println!("{}{value}: no test ARI ({} runs, {} failed)", row.method, row.runs, row.failed),
        }
    }
    let failed = report.failed_runs();
    if failed > 0 {
        eprintln!(
            "{failed} of {} runs failed; see {}",
            report.runs.len(),
            cfg.output_dir.join("errors.log").display()
        );
    }
    println!("outputs written to {}", cfg.output_dir.display());
    Ok(report.all_succeeded())
}

fn generate(args: &GenerateArgs) -> Result<()> {
    let mut data = match args.data.model {
        Some(Generator::Polarized) => DataSource::default_polarized(),
        _ => DataSource::default_ssbm(),
    };
    args.data.apply(&mut data)?;
    let lg = if let Some(p) = data.ssbm_params(args.seed) {
        sample_ssbm(&p)?
    } else {
        let p = data.polarized_params(args.seed).expect("generator source");
        sample_polarized(&p)?.labeled
    };
    fs::create_dir_all(&args.out).map_err(|e| BenchError::Io {
        path: args.out.clone(),
        source: e,
    })?;
    write_edge_list(&lg.graph, &args.out.join("graph.tsv"))?;
    write_labels(&lg.labels, &args.out.join("labels.tsv"))?;
    println!(
        "{} nodes, {} edges, {} clusters written to {}",
        lg.graph.n(),
        lg.graph.num_edges(),
        lg.num_clusters,
        args.out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Generate(args) => generate(args).map(|_| true),
        Command::Run(args) => args.exp.build().and_then(|cfg| execute(cfg, &args.exp)),
        Command::Sweep(args) => args.exp.build().and_then(|mut cfg| {
            let axis: SweepAxis = args.axis.parse()?;
            let values = match &args.values {
                Some(v) => v.clone(),
                None if axis == SweepAxis::Eta => Sweep::DEFAULT_ETA_GRID.to_vec(),
                None => return Err(BenchError::Config(format!("--values is required when sweeping {}", axis.name()))),
            };
            cfg.sweep = Some(Sweep { axis, values });
            execute(cfg, &args.exp)
        }),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
