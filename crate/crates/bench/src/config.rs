//! Experiment configuration: one JSON document per experiment.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sssnet::spectral::BaselineMethod;
use sssnet::synth::{PolSsbmParams, SsbmParams};
use sssnet::train::TrainConfig;

use crate::error::{io_err, BenchError, Result};

/// A clustering method: the trained model or one of the spectral baselines.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Method {
    Sssnet,
    Baseline(BaselineMethod),
}

impl Method {
    pub const SSSNET_TAG: &'static str = "SSSNET";

    /// SSSNET followed by the nine baselines.
    pub fn all() -> Vec<Method> {
        std::iter::once(Method::Sssnet)
            .chain(BaselineMethod::ALL.into_iter().map(Method::Baseline))
            .collect()
    }

    /// Comma-separated tags; `all` and `baselines` expand.
    pub fn parse_list(s: &str) -> Result<Vec<Method>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "all" => out.extend(Method::all()),
                "baselines" => out.extend(BaselineMethod::ALL.into_iter().map(Method::Baseline)),
                tag => out.push(tag.parse()?),
            }
        }
        let mut seen = Vec::new();
        out.retain(|m| {
            let fresh = !seen.contains(m);
            seen.push(*m);
            fresh
        });
        Ok(out)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Sssnet => f.write_str(Self::SSSNET_TAG),
            Method::Baseline(b) => write!(f, "{b}"),
        }
    }
}

impl FromStr for Method {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case(Self::SSSNET_TAG) {
            return Ok(Method::Sssnet);
        }
        s.parse::<BaselineMethod>()
            .map(Method::Baseline)
            .map_err(|_| BenchError::Config(format!("unknown method {s:?}")))
    }
}

impl TryFrom<String> for Method {
    type Error = BenchError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.to_string()
    }
}

/// Files describing a real network.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileSource {
    /// Tab-separated edge list. Exactly one of `edges` and `correlation` is set.
    pub edges: Option<PathBuf>,
    /// Dense correlation matrix as CSV.
    pub correlation: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    /// Node attributes; override the spectral input features.
    pub attributes: Option<PathBuf>,
    pub directed: bool,
    /// Repeatedly drop nodes with fewer neighbors than this.
    pub min_degree: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    Ssbm {
        n: usize,
        k: usize,
        p: f64,
        rho: f64,
        eta: f64,
    },
    Polarized {
        n: usize,
        r: usize,
        p: f64,
        rho: f64,
        eta: f64,
        community_size: usize,
    },
    Files(FileSource),
}

impl DataSource {
    pub fn default_ssbm() -> Self {
        DataSource::Ssbm {
            n: 1000,
            k: 5,
            p: 0.01,
            rho: 1.5,
            eta: 0.0,
        }
    }

    pub fn default_polarized() -> Self {
        DataSource::Polarized {
            n: 1050,
            r: 2,
            p: 0.1,
            rho: 1.5,
            eta: 0.1,
            community_size: 200,
        }
    }

    pub fn is_synthetic(&self) -> bool {
        !matches!(self, DataSource::Files(_))
    }

    pub fn ssbm_params(&self, seed: u64) -> Option<SsbmParams> {
        match *self {
            DataSource::Ssbm { n, k, p, rho, eta } => Some(SsbmParams { n, k, p, rho, eta, seed }),
            _ => None,
        }
    }

    pub fn polarized_params(&self, seed: u64) -> Option<PolSsbmParams> {
        match *self {
            DataSource::Polarized {
                n,
                r,
                p,
                rho,
                eta,
                community_size,
            } => Some(PolSsbmParams {
                n,
                r,
                p,
                rho,
                eta,
                community_size,
                seed,
            }),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    pub hop: usize,
    pub hidden: usize,
    /// Add the two-negative-hop friend term.
    pub balance: bool,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            hop: 2,
            hidden: 32,
            balance: false,
        }
    }
}

/// Parameter varied across sweep points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Eta,
    P,
    Rho,
    N,
    SeedRatio,
    Hop,
    Hidden,
    GammaS,
    GammaT,
    Alpha,
    Lr,
    Tau,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Eta => "eta",
            SweepAxis::P => "p",
            SweepAxis::Rho => "rho",
            SweepAxis::N => "n",
            SweepAxis::SeedRatio => "seed_ratio",
            SweepAxis::Hop => "hop",
            SweepAxis::Hidden => "hidden",
            SweepAxis::GammaS => "gamma_s",
            SweepAxis::GammaT => "gamma_t",
            SweepAxis::Alpha => "alpha",
            SweepAxis::Lr => "lr",
            SweepAxis::Tau => "tau",
        }
    }

    const ALL: [SweepAxis; 12] = [
        SweepAxis::Eta,
        SweepAxis::P,
        SweepAxis::Rho,
        SweepAxis::N,
        SweepAxis::SeedRatio,
        SweepAxis::Hop,
        SweepAxis::Hidden,
        SweepAxis::GammaS,
        SweepAxis::GammaT,
        SweepAxis::Alpha,
        SweepAxis::Lr,
        SweepAxis::Tau,
    ];

    /// Writes `value` into the matching field of `cfg`.
    pub fn apply(self, cfg: &mut ExperimentConfig, value: f64) -> Result<()> {
        let whole = || -> Result<usize> {
            if value >= 0.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(BenchError::Config(format!("{} needs a whole number, got {value}", self.name())))
            }
        };
        let generator_only = || BenchError::Config(format!("sweeping {} needs generated data", self.name()));
        match self {
            SweepAxis::Eta | SweepAxis::P | SweepAxis::Rho | SweepAxis::N => {
                let as_n = if self == SweepAxis::N { whole()? } else { 0 };
                let (n, p, rho, eta) = match &mut cfg.data {
                    DataSource::Ssbm { n, p, rho, eta, .. } | DataSource::Polarized { n, p, rho, eta, .. } => (n, p, rho, eta),
                    DataSource::Files(_) => return Err(generator_only()),
                };
                match self {
                    SweepAxis::Eta => *eta = value,
                    SweepAxis::P => *p = value,
                    SweepAxis::Rho => *rho = value,
                    _ => *n = as_n,
                }
            }
            SweepAxis::SeedRatio => cfg.seed_ratio = value,
            SweepAxis::Hop => cfg.model.hop = whole()?,
            SweepAxis::Hidden => cfg.model.hidden = whole()?,
            SweepAxis::GammaS => cfg.train.gamma_s = value,
            SweepAxis::GammaT => cfg.train.gamma_t = value,
            SweepAxis::Alpha => cfg.train.alpha = value,
            SweepAxis::Lr => cfg.train.lr = value,
            SweepAxis::Tau => cfg.train.tau_pos = value,
        }
        Ok(())
    }
}

impl FromStr for SweepAxis {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('-', "_").to_ascii_lowercase();
        SweepAxis::ALL
            .into_iter()
            .find(|a| a.name() == norm)
            .ok_or_else(|| BenchError::Config(format!("unknown sweep axis {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

impl Sweep {
    pub const DEFAULT_ETA_GRID: [f64; 7] = [0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub data: DataSource,
    /// Cluster count for loaded data without labels; ignored for generators.
    pub num_clusters: Option<usize>,
    pub methods: Vec<Method>,
    pub model: ModelParams,
    /// Training hyperparameters. `seed` is replaced per run.
    pub train: TrainConfig,
    pub seed_ratio: f64,
    pub test_fraction: f64,
    pub val_fraction: f64,
    /// Independent graphs per sweep point (loaded data is reused).
    pub graphs: usize,
    /// Splits per graph.
    pub splits_per_graph: usize,
    pub sweep: Option<Sweep>,
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Worker threads; `None` uses the available parallelism.
    pub workers: Option<usize>,
    /// Write a checkpoint for every trained model.
    pub save_models: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data: DataSource::default_ssbm(),
            num_clusters: None,
            methods: Method::all(),
            model: ModelParams::default(),
            train: TrainConfig::default(),
            seed_ratio: 0.1,
            test_fraction: 0.1,
            val_fraction: 0.1,
            graphs: 5,
            splits_per_graph: 2,
            sweep: None,
            output_dir: PathBuf::from("results"),
            seed: 0,
            workers: None,
            save_models: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str, source: &Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| BenchError::Json {
            path: source.to_path_buf(),
            source: e,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_json(&text, path)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn runs_per_point(&self) -> usize {
        self.graphs * self.splits_per_graph
    }

    /// Sets the total run count, keeping the per-graph split count when it
    /// divides `runs` and falling back to one split per graph otherwise.
    pub fn set_runs(&mut self, runs: usize) {
        if self.splits_per_graph > 0 && runs % self.splits_per_graph == 0 {
            self.graphs = runs / self.splits_per_graph;
        } else {
            self.graphs = runs;
            self.splits_per_graph = 1;
        }
    }

    /// Sweep values, or a single unnamed point.
    pub fn points(&self) -> Vec<Option<f64>> {
        match &self.sweep {
            Some(s) => s.values.iter().copied().map(Some).collect(),
            None => vec![None],
        }
    }

    /// The configuration in effect at one sweep point.
    pub fn at_point(&self, value: Option<f64>) -> Result<ExperimentConfig> {
        let mut cfg = self.clone();
        if let (Some(s), Some(v)) = (&self.sweep, value) {
            s.axis.apply(&mut cfg, v)?;
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BenchError::Config(m));
        if self.methods.is_empty() {
            return bad("no methods selected".into());
        }
        if self.runs_per_point() == 0 {
            return bad("need at least one run".into());
        }
        if !(self.seed_ratio > 0.0 && self.seed_ratio <= 1.0) {
            return bad(format!("seed_ratio must lie in (0, 1], got {}", self.seed_ratio));
        }
        let (t, v) = (self.test_fraction, self.val_fraction);
        if !(t >= 0.0 && v >= 0.0 && t + v < 1.0) {
            return bad(format!("test and validation fractions {t}, {v} must be nonnegative and sum below 1"));
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return bad("sweep has no values".into());
            }
        }
        if let DataSource::Files(f) = &self.data {
            if f.edges.is_some() == f.correlation.is_some() {
                return bad("set exactly one of edges and correlation".into());
            }
            if f.labels.is_none() && self.num_clusters.is_none() {
                return bad("unlabeled data needs num_clusters".into());
            }
        }
        for value in self.points() {
            let cfg = self.at_point(value)?;
            cfg.train.validate()?;
            if let Some(p) = cfg.data.ssbm_params(0) {
                p.validate()?;
            }
            if let Some(p) = cfg.data.polarized_params(0) {
                p.validate()?;
            }
            if cfg.model.balance && cfg.model.hop != sssnet::model::BALANCE_HOP {
                return Err(sssnet::Error::UnsupportedHop(cfg.model.hop).into());
            }
            if cfg.model.hidden == 0 {
                return bad("hidden dimension must be at least 1".into());
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_tags_round_trip() {
        for m in Method::all() {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(serde_json::from_str::<Method>(&json).unwrap(), m);
        }
        assert_eq!(Method::parse_list("SSSNET,SPONGE,SSSNET").unwrap().len(), 2);
        assert_eq!(Method::parse_list("all").unwrap().len(), 10);
        assert!(Method::parse_list("bogus").is_err());
    }

    #[test]
    fn config_round_trips_and_rejects_unknown_fields() {
        let cfg = ExperimentConfig {
            sweep: Some(Sweep {
                axis: SweepAxis::Eta,
                values: vec![0.0, 0.1],
            }),
            ..Default::default()
        };
        let text = cfg.to_json();
        assert_eq!(ExperimentConfig::from_json(&text, Path::new("c")).unwrap(), cfg);
        let bad = text.replacen("\"seed_ratio\"", "\"seed_ration\"", 1);
        assert!(ExperimentConfig::from_json(&bad, Path::new("c")).is_err());
        assert!(ExperimentConfig::from_json(r#"{"data": {"kind": "ssbm", "n": 10}}"#, Path::new("c")).is_err());
    }

    #[test]
    fn partial_config_takes_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"seed": 4, "train": {"lr": 0.05}}"#, Path::new("c")).unwrap();
        assert_eq!(cfg.train.lr, 0.05);
        assert_eq!(cfg.train.gamma_s, 50.0);
        let cfg = ExperimentConfig::from_json(r#"{"seed": 4, "methods": ["SPONGE"]}"#, Path::new("c")).unwrap();
        assert_eq!(cfg.runs_per_point(), 10);
        assert_eq!(cfg.methods, vec![Method::Baseline(BaselineMethod::Sponge)]);
        cfg.validate().unwrap();
    }

    #[test]
    fn sweep_axis_applies() {
        let mut cfg = ExperimentConfig::default();
        SweepAxis::Eta.apply(&mut cfg, 0.2).unwrap();
        assert_eq!(cfg.data.ssbm_params(0).unwrap().eta, 0.2);
        SweepAxis::Hop.apply(&mut cfg, 3.0).unwrap();
        assert_eq!(cfg.model.hop, 3);
        assert!(SweepAxis::Hop.apply(&mut cfg, 1.5).is_err());
        assert_eq!("seed-ratio".parse::<SweepAxis>().unwrap(), SweepAxis::SeedRatio);
    }

    #[test]
    fn runs_split_into_graphs() {
        let mut cfg = ExperimentConfig::default();
        cfg.set_runs(6);
        assert_eq!((cfg.graphs, cfg.splits_per_graph), (3, 2));
        cfg.set_runs(3);
        assert_eq!((cfg.graphs, cfg.splits_per_graph), (3, 1));
    }

    #[test]
    fn validation_catches_bad_settings() {
        let mut cfg = ExperimentConfig::default();
        cfg.seed_ratio = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.model.balance = true;
        cfg.model.hop = 3;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.data = DataSource::Files(FileSource::default());
        assert!(cfg.validate().is_err());
    }
}
