//! WebAssembly front end for a single static page. A [`Session`] holds one
//! sampled graph; the page asks it to cluster with a spectral baseline or a
//! short SSSNET training run, and to rasterize the adjacency matrix with nodes
//! sorted by the true or the predicted clusters.
//!
//! Results cross the boundary as JSON strings so the page needs no bindings
//! beyond `JSON.parse`.

use ndarray::Array2;
use serde::Serialize;
use sssnet::metrics::{ari, nmi, unhappy_ratio};
use sssnet::model::{ModelConfig, PreparedChannels};
use sssnet::rng::{derive_seed, seeded};
use sssnet::spectral::{baseline_cluster, input_features, BaselineMethod, FeatureMode};
use sssnet::synth::{sample_polarized, sample_ssbm, LabeledGraph, PolSsbmParams, SsbmParams};
use sssnet::train::{make_split, train, SplitFractions, TrainConfig};
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

#[derive(Serialize)]
struct GraphSummary {
    nodes: usize,
    edges: usize,
    positive: usize,
    negative: usize,
    clusters: usize,
    cluster_sizes: Vec<usize>,
}

#[derive(Serialize)]
struct Scores {
    method: String,
    ari: f64,
    nmi: f64,
    unhappy_ratio: f64,
    /// Test-set ARI; only SSSNET has a held-out split.
    test_ari: Option<f64>,
    epochs: Option<usize>,
}

/// One sampled graph plus the most recent prediction.
#[wasm_bindgen]
pub struct Session {
    data: LabeledGraph,
    predicted: Option<Vec<usize>>,
    seed: u64,
}

#[wasm_bindgen]
impl Session {
    /// Signed stochastic block model with `k` blocks.
    pub fn ssbm(n: usize, k: usize, p: f64, rho: f64, eta: f64, seed: u64) -> Result<Session, JsError> {
        let data = sample_ssbm(&SsbmParams { n, k, p, rho, eta, seed }).map_err(js_err)?;
        Ok(Session {
            data,
            predicted: None,
            seed,
        })
    }

    /// Polarized model: `r` two-block communities of default size
    /// `community_size` inside a signed random background.
    pub fn polarized(n: usize, r: usize, community_size: usize, p: f64, rho: f64, eta: f64, seed: u64) -> Result<Session, JsError> {
        let params = PolSsbmParams {
            n,
            r,
            p,
            rho,
            eta,
            community_size,
            seed,
        };
        let data = sample_polarized(&params).map_err(js_err)?.labeled;
        Ok(Session {
            data,
            predicted: None,
            seed,
        })
    }

    /// Node, edge and cluster counts as JSON.
    pub fn summary(&self) -> String {
        let g = &self.data.graph;
        let positive = g.edges().iter().filter(|e| e.2 > 0.0).count();
        let s = GraphSummary {
            nodes: g.n(),
            edges: g.num_edges(),
            positive,
            negative: g.num_edges() - positive,
            clusters: self.data.num_clusters,
            cluster_sizes: self.data.cluster_sizes(),
        };
        serde_json::to_string(&s).expect("summary serializes")
    }

    /// Runs one of the nine spectral baselines (`A`, `sns`, `dns`, `L`,
    /// `L_sym`, `BNC`, `BRC`, `SPONGE`, `SPONGE_sym`) and returns its scores.
    pub fn cluster_baseline(&mut self, method: &str) -> Result<String, JsError> {
        let m: BaselineMethod = method.parse().map_err(js_err)?;
        let mut rng = seeded(derive_seed(self.seed, 3));
        let pred = baseline_cluster(&self.data.graph, self.data.num_clusters, m, &mut rng).map_err(js_err)?;
        let scores = self.score(m.tag(), &pred, None, None)?;
        self.predicted = Some(pred);
        Ok(scores)
    }

    /// Trains SSSNET for at most `epochs` epochs with `seed_ratio` of the
    /// training nodes labeled, then predicts every node.
    pub fn train_sssnet(&mut self, epochs: usize, seed_ratio: f64, hidden: usize) -> Result<String, JsError> {
        let g = &self.data.graph;
        let k = self.data.num_clusters;
        let labels = &self.data.labels;
        let split = make_split(labels, SplitFractions::default(), seed_ratio, &mut seeded(derive_seed(self.seed, 1))).map_err(js_err)?;
        let x = input_features(g, k, FeatureMode::Synthetic, self.seed).map_err(js_err)?;
        let cfg = TrainConfig {
            max_epochs: epochs.max(1),
            patience: epochs.max(1),
            seed: derive_seed(self.seed, 2),
            ..Default::default()
        };
        let model_cfg = ModelConfig {
            d_in: x.ncols(),
            hidden,
            num_clusters: k,
            hop: 2,
            directed: g.is_directed(),
            balance: false,
        };
        let trained = train(g, &x, &split, Some(labels), model_cfg, &cfg).map_err(js_err)?;
        let ch = PreparedChannels::from_graph(g, cfg.tau_pos, cfg.tau_neg).map_err(js_err)?;
        let pred = trained.model.predict(&x, &ch).map_err(js_err)?.labels;
        let test_pred: Vec<usize> = split.test.iter().map(|&i| pred[i]).collect();
        let test_true: Vec<usize> = split.test.iter().map(|&i| labels[i]).collect();
        let test_ari = if split.test.len() > 1 { Some(ari(&test_pred, &test_true).map_err(js_err)?) } else { None };
        let scores = self.score("SSSNET", &pred, test_ari, Some(trained.history.records.len()))?;
        self.predicted = Some(pred);
        Ok(scores)
    }

    /// RGBA pixels of a `size x size` image of the adjacency matrix with nodes
    /// grouped by cluster. Blue is positive, red negative; brightness follows
    /// edge density within the pixel. `by_prediction` sorts by the latest
    /// prediction instead of the planted clusters.
    pub fn raster(&self, size: usize, by_prediction: bool) -> Vec<u8> {
        let labels = match (&self.predicted, by_prediction) {
            (Some(p), true) => p.as_slice(),
            _ => self.data.labels.as_slice(),
        };
        raster(&self.data.graph, labels, size)
    }

    pub fn num_nodes(&self) -> usize {
        self.data.graph.n()
    }
}

impl Session {
    fn score(&self, method: &str, pred: &[usize], test_ari: Option<f64>, epochs: Option<usize>) -> Result<String, JsError> {
        let truth = &self.data.labels;
        let s = Scores {
            method: method.to_string(),
            ari: ari(pred, truth).map_err(js_err)?,
            nmi: nmi(pred, truth).map_err(js_err)?,
            unhappy_ratio: unhappy_ratio(&self.data.graph, pred).map_err(js_err)?,
            test_ari,
            epochs,
        };
        Ok(serde_json::to_string(&s).expect("scores serialize"))
    }
}

/// Positions of every node after a stable sort by label.
fn order_by(labels: &[usize]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..labels.len()).collect();
    idx.sort_by_key(|&i| labels[i]);
    let mut pos = vec![0; labels.len()];
    for (p, &i) in idx.iter().enumerate() {
        pos[i] = p;
    }
    pos
}

fn raster(g: &sssnet::SignedGraph, labels: &[usize], size: usize) -> Vec<u8> {
    let n = g.n();
    let size = size.max(1);
    let pos = order_by(labels);
    let cell = |p: usize| p * size / n.max(1);
    let mut plus = Array2::<f64>::zeros((size, size));
    let mut minus = Array2::<f64>::zeros((size, size));
    for &(i, j, w) in &g.edges() {
        let (a, b) = (cell(pos[i]), cell(pos[j]));
        let grid = if w > 0.0 { &mut plus } else { &mut minus };
        grid[[a, b]] += 1.0;
        if !g.is_directed() {
            grid[[b, a]] += 1.0;
        }
    }
    // Nodes per pixel row, so brightness is a density and not a count.
    let span = (n as f64 / size as f64).max(1.0);
    let full = span * span;
    let mut px = vec![0u8; size * size * 4];
    for r in 0..size {
        for c in 0..size {
            let shade = |v: f64| (255.0 * (v / full).sqrt().min(1.0)) as u8;
            let (p, m) = (shade(plus[[r, c]]), shade(minus[[r, c]]));
            let o = (r * size + c) * 4;
            px[o] = m;
            px[o + 1] = p.min(m) / 2;
            px[o + 2] = p;
            px[o + 3] = 255;
        }
    }
    // Thin gray lines at cluster boundaries.
    let mut sorted = labels.to_vec();
    sorted.sort_unstable();
    for p in 1..n {
        if sorted[p] != sorted[p - 1] {
            let line = cell(p);
            for t in 0..size {
                for o in [(line * size + t) * 4, (t * size + line) * 4] {
                    px[o..o + 3].copy_from_slice(&[96, 96, 96]);
                }
            }
        }
    }
    px
}
