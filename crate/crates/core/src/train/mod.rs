//! Training: losses with exact gradients, splits, triplet sampling, Adam and
//! the epoch loop with early stopping and model selection.

pub mod adam;
pub mod losses;
pub mod split;
pub mod triplets;

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SignedGraph;
use crate::metrics::{ari, unhappy_ratio};
use crate::model::{init_model, ForwardPass, GradientTape, ModelConfig, PreparedChannels, SimpaModel};
use crate::rng::{derive_seed, seeded};
pub use adam::{adam_step, AdamState};
pub use losses::{ce_loss, combine_losses, pbnc_loss, triplet_loss, PbncTarget, Triplet, TripletValue};
pub use split::{make_split, Split, SplitFractions};
pub use triplets::sample_triplets;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub gamma_s: f64,
    pub gamma_t: f64,
    pub alpha: f64,
    pub lr: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    pub patience: usize,
    /// Triplets per epoch; `None` means ten per seed.
    pub triplet_cap: Option<usize>,
    /// Use the hinge with the similarity order swapped.
    pub triplet_literal: bool,
    pub tau_pos: f64,
    pub tau_neg: f64,
    pub seed: u64,
    /// Drop the PBNC term from the objective (it is still reported). Only
    /// meaningful with supervision.
    pub use_pbnc: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gamma_s: 50.0,
            gamma_t: 0.1,
            alpha: 0.0,
            lr: 0.01,
            weight_decay: 5e-4,
            max_epochs: 300,
            patience: 100,
            triplet_cap: None,
            triplet_literal: false,
            tau_pos: crate::graph::DEFAULT_TAU_POS,
            tau_neg: crate::graph::DEFAULT_TAU_NEG,
            seed: 0,
            use_pbnc: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
            }
        };
        positive("gamma_s", self.gamma_s)?;
        positive("gamma_t", self.gamma_t)?;
        positive("lr", self.lr)?;
        if !(self.alpha >= 0.0) || !(self.weight_decay >= 0.0) {
            return Err(Error::InvalidParameter("alpha and weight_decay must be nonnegative".into()));
        }
        if self.max_epochs == 0 {
            return Err(Error::InvalidParameter("max_epochs must be at least 1".into()));
        }
        Ok(())
    }
}

/// Loss components of one evaluation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub pbnc: f64,
    pub ce: f64,
    pub triplet: f64,
    pub total: f64,
}

/// What the objective sees: the PBNC subgraph plus optional supervision.
#[derive(Clone, Debug)]
pub struct Objective {
    pub pbnc: PbncTarget,
    pub use_pbnc: bool,
    pub seeds: Vec<usize>,
    pub labels: Option<Vec<usize>>,
    pub gamma_s: f64,
    pub gamma_t: f64,
    pub alpha: f64,
    pub triplet_literal: bool,
}

impl Objective {
    /// Semi-supervised when labels and seeds exist (PBNC on the training
    /// subgraph), otherwise self-supervised PBNC on all nodes.
    pub fn new(graph: &SignedGraph, split: &Split, labels: Option<&[usize]>, cfg: &TrainConfig) -> Result<Self> {
        let supervised = labels.is_some() && !split.seeds.is_empty();
        if !supervised && !cfg.use_pbnc {
            return Err(Error::InvalidParameter("without PBNC the objective needs labeled seeds".into()));
        }
        let pbnc = if supervised {
            PbncTarget::new(graph, &split.train)?
        } else {
            PbncTarget::all_nodes(graph)?
        };
        Ok(Self {
            pbnc,
            use_pbnc: cfg.use_pbnc,
            seeds: if supervised { split.seeds.clone() } else { Vec::new() },
            labels: labels.map(<[usize]>::to_vec),
            gamma_s: cfg.gamma_s,
            gamma_t: cfg.gamma_t,
            alpha: cfg.alpha,
            triplet_literal: cfg.triplet_literal,
        })
    }

    pub fn supervised(&self) -> bool {
        !self.seeds.is_empty()
    }

    /// Loss value and `(dL/dP, dL/dZ)` for a forward pass.
    pub fn evaluate(&self, pass: &ForwardPass, triplets: &[Triplet]) -> Result<(LossBreakdown, Array2<f64>, Option<Array2<f64>>)> {
        let probs = &pass.assignment.probs;
        let (pbnc, mut d_probs) = self.pbnc.value_and_grad(probs)?;
        let counted = if self.use_pbnc { pbnc } else { 0.0 };
        if !self.use_pbnc {
            d_probs.fill(0.0);
        }
        let mut out = LossBreakdown {
            pbnc,
            total: counted,
            ..Default::default()
        };
        let mut d_embedding = None;
        if let (true, Some(labels)) = (self.supervised(), &self.labels) {
            let (ce, d_ce) = losses::ce_loss_and_grad(probs, &self.seeds, labels)?;
            d_probs.scaled_add(self.gamma_s, &d_ce);
            let (trip, d_trip) = losses::triplet_loss_and_grad(&pass.embedding, triplets, self.alpha, self.triplet_literal);
            if trip.active {
                d_embedding = Some(d_trip * (self.gamma_s * self.gamma_t));
            }
            out.ce = ce;
            out.triplet = trip.loss;
            out.total = combine_losses(counted, ce, trip.loss, self.gamma_s, self.gamma_t);
        }
        Ok((out, d_probs, d_embedding))
    }

    /// Loss and exact gradient for fixed dropout masks and triplets.
    pub fn loss_and_gradient(
        &self,
        model: &SimpaModel,
        x: &Array2<f64>,
        ch: &PreparedChannels,
        masks: Option<&crate::model::DropoutMasks>,
        triplets: &[Triplet],
    ) -> Result<(LossBreakdown, GradientTape)> {
        let pass = model.forward(x, ch, masks)?;
        let (loss, d_probs, d_embedding) = self.evaluate(&pass, triplets)?;
        if !loss.total.is_finite() {
            return Err(Error::NonFinite("training loss".into()));
        }
        Ok((loss, model.backward(x, ch, &pass, &d_probs, d_embedding.as_ref())))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: LossBreakdown,
    pub train_ari: Option<f64>,
    pub val_ari: Option<f64>,
    pub unhappy_ratio: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub records: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub stopped_early: bool,
    /// Training hit a non-finite loss and stopped; the selected model predates it.
    pub diverged: bool,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

impl History {
    pub const CSV_HEADER: &'static str = "epoch,L_pbnc,L_ce,L_triplet,total,train_ari,val_ari,unhappy_ratio";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                r.epoch,
                r.loss.pbnc,
                r.loss.ce,
                r.loss.triplet,
                r.loss.total,
                opt(r.train_ari),
                opt(r.val_ari),
                opt(r.unhappy_ratio)
            );
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

fn subset_ari(pred: &[usize], labels: &[usize], nodes: &[usize]) -> Result<Option<f64>> {
    if nodes.is_empty() {
        return Ok(None);
    }
    let a: Vec<usize> = nodes.iter().map(|&i| pred[i]).collect();
    let b: Vec<usize> = nodes.iter().map(|&i| labels[i]).collect();
    Ok(Some(ari(&a, &b)?))
}

/// Outcome of [`train`].
#[derive(Clone, Debug)]
pub struct TrainedModel {
    pub model: SimpaModel,
    pub history: History,
}

/// Full-graph training with Adam.
///
/// Each epoch records metrics for the current parameters (eval mode), then takes
/// one optimizer step on the dropout-perturbed loss. With a validation set the
/// epoch with the best validation ARI is kept; otherwise early stopping follows
/// the training loss and the last (labeled) or lowest-loss (unlabeled)
/// parameters are returned.
pub fn train(
    graph: &SignedGraph,
    features: &Array2<f64>,
    split: &Split,
    labels: Option<&[usize]>,
    model_config: ModelConfig,
    cfg: &TrainConfig,
) -> Result<TrainedModel> {
    cfg.validate()?;
    if features.nrows() != graph.n() {
        return Err(Error::DimensionMismatch(format!("{} feature rows for {} nodes", features.nrows(), graph.n())));
    }
    if let Some(l) = labels {
        if l.len() != graph.n() {
            return Err(Error::DimensionMismatch(format!("{} labels for {} nodes", l.len(), graph.n())));
        }
    }
    let channels = PreparedChannels::from_graph(graph, cfg.tau_pos, cfg.tau_neg)?;
    let objective = Objective::new(graph, split, labels, cfg)?;
    let mut model = init_model(model_config, derive_seed(cfg.seed, 0))?;
    let mut rng = seeded(derive_seed(cfg.seed, 1));
    let mut adam = AdamState::new(&model);
    let cap = cfg.triplet_cap.unwrap_or(10 * objective.seeds.len());
    let use_val = labels.is_some() && !split.val.is_empty();

    let mut history = History::default();
    let mut best_model = model.clone();
    let mut best_score = f64::NEG_INFINITY;
    for epoch in 0..cfg.max_epochs {
        let eval = model.predict(features, &channels)?;
        let (train_ari, val_ari) = match labels {
            Some(l) => (subset_ari(&eval.labels, l, &split.train)?, subset_ari(&eval.labels, l, &split.val)?),
            None => (None, None),
        };
        let unhappy = unhappy_ratio(graph, &eval.labels).ok();

        let masks = model.sample_dropout(graph.n(), &mut rng);
        let triplets = match labels {
            Some(l) if objective.supervised() => sample_triplets(&objective.seeds, l, cap, &mut rng),
            _ => Vec::new(),
        };
        let step = objective.loss_and_gradient(&model, features, &channels, Some(&masks), &triplets);
        let (loss, grad) = match step {
            Ok(v) => v,
            Err(Error::NonFinite(_)) => {
                history.diverged = true;
                break;
            }
            Err(e) => return Err(e),
        };
        history.records.push(EpochRecord {
            epoch,
            loss,
            train_ari,
            val_ari,
            unhappy_ratio: unhappy,
        });

        let score = if use_val { val_ari.unwrap_or(f64::NEG_INFINITY) } else { -loss.total };
        if score > best_score {
            best_score = score;
            history.best_epoch = epoch;
            if use_val || labels.is_none() {
                best_model = model.clone();
            }
        }
        if !use_val && labels.is_some() {
            best_model = model.clone();
        }
        if epoch - history.best_epoch >= cfg.patience {
            history.stopped_early = epoch + 1 < cfg.max_epochs;
            break;
        }
        adam_step(&mut model, &grad, cfg.lr, cfg.weight_decay, &mut adam);
    }
    if history.records.is_empty() {
        return Err(Error::NonFinite("loss diverged in the first epoch".into()));
    }
    Ok(TrainedModel {
        model: best_model,
        history,
    })
}
