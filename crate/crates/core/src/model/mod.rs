//! The SSSNET network: four (or two, for undirected graphs) MLP feature maps,
//! signed mixed-path aggregation of their outputs and a softmax head.
//!
//! Channels are always ordered source-positive, source-negative,
//! target-positive, target-negative, both for the MLPs and for the column blocks
//! of the embedding.

pub mod checkpoint;
pub mod head;
pub mod mlp;
pub mod simpa;

use ndarray::{concatenate, s, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::seeded;
pub use head::{ClusterAssignment, Head};
pub use mlp::Mlp;
pub use simpa::{channel_counts, AggregationStats, DirectionOps, PreparedChannels};
use simpa::{enemy_backward, enemy_forward, friend_backward, friend_forward, EnemyTrace, FriendTrace};

/// Hop count the balance variant is defined for.
pub const BALANCE_HOP: usize = 2;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub d_in: usize,
    pub hidden: usize,
    pub num_clusters: usize,
    pub hop: usize,
    pub directed: bool,
    /// Adds the two-negative-hop term to the friend channels.
    #[serde(default)]
    pub balance: bool,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d_in == 0 || self.hidden == 0 || self.num_clusters == 0 {
            return Err(Error::InvalidParameter("d_in, hidden and num_clusters must be at least 1".into()));
        }
        if self.balance && self.hop != BALANCE_HOP {
            return Err(Error::UnsupportedHop(self.hop));
        }
        Ok(())
    }

    pub fn num_channels(&self) -> usize {
        if self.directed {
            4
        } else {
            2
        }
    }

    pub fn embedding_dim(&self) -> usize {
        self.num_channels() * self.hidden
    }
}

/// Mixing weights for every path family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmegaSet {
    pub sp: Vec<f64>,
    pub sn: Vec<f64>,
    pub tp: Vec<f64>,
    pub tn: Vec<f64>,
    /// Balance-term weight for the source (and target) direction; empty unless
    /// the balance variant is active.
    pub balance_s: Vec<f64>,
    pub balance_t: Vec<f64>,
}

/// Model parameters. A zero-filled instance with the same layout doubles as the
/// gradient buffer.
#[derive(Clone, Debug, PartialEq)]
pub struct SimpaModel {
    pub config: ModelConfig,
    pub mlps: Vec<Mlp>,
    pub omega: OmegaSet,
    pub head: Head,
}

/// Gradient buffers shaped exactly like the model's parameters.
pub type GradientTape = SimpaModel;

/// One dropout mask per MLP.
#[derive(Clone, Debug)]
pub struct DropoutMasks(pub Vec<Array2<f64>>);

/// Everything the backward pass needs from a forward pass.
#[derive(Clone, Debug)]
pub struct ForwardPass {
    pub hidden: Vec<Array2<f64>>,
    pub embedding: Array2<f64>,
    pub assignment: ClusterAssignment,
    pub stats: AggregationStats,
    mlp_caches: Vec<mlp::MlpCache>,
    friend: Vec<FriendTrace>,
    enemy: Vec<EnemyTrace>,
}

fn omega_lengths(config: &ModelConfig) -> [usize; 6] {
    let (f, e) = channel_counts(config.hop);
    let (tf, te) = if config.directed { (f, e) } else { (0, 0) };
    let bs = usize::from(config.balance);
    let bt = usize::from(config.balance && config.directed);
    [f, e, tf, te, bs, bt]
}

/// Randomly initialized model; every mixing weight starts at `1.0`.
pub fn init_model(config: ModelConfig, seed: u64) -> Result<SimpaModel> {
    config.validate()?;
    let mut rng = seeded(seed);
    let mlps = (0..config.num_channels())
        .map(|_| Mlp::uniform(config.d_in, config.hidden, &mut rng))
        .collect();
    let head = Head::uniform(config.embedding_dim(), config.num_clusters, &mut rng);
    let [f, e, tf, te, bs, bt] = omega_lengths(&config);
    let omega = OmegaSet {
        sp: vec![1.0; f],
        sn: vec![1.0; e],
        tp: vec![1.0; tf],
        tn: vec![1.0; te],
        balance_s: vec![1.0; bs],
        balance_t: vec![1.0; bt],
    };
    Ok(SimpaModel { config, mlps, omega, head })
}

impl SimpaModel {
    pub fn zeros_like(&self) -> SimpaModel {
        let c = &self.config;
        let [f, e, tf, te, bs, bt] = omega_lengths(c);
        SimpaModel {
            config: c.clone(),
            mlps: (0..c.num_channels()).map(|_| Mlp::zeros(c.d_in, c.hidden)).collect(),
            omega: OmegaSet {
                sp: vec![0.0; f],
                sn: vec![0.0; e],
                tp: vec![0.0; tf],
                tn: vec![0.0; te],
                balance_s: vec![0.0; bs],
                balance_t: vec![0.0; bt],
            },
            head: Head::zeros(c.embedding_dim(), c.num_clusters),
        }
    }

    /// Checks every parameter shape against the configuration.
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let c = &self.config;
        if self.mlps.len() != c.num_channels() {
            return Err(Error::DimensionMismatch(format!("expected {} MLPs, found {}", c.num_channels(), self.mlps.len())));
        }
        for m in &self.mlps {
            if m.w1.dim() != (c.d_in, c.hidden) || m.w2.dim() != (c.hidden, c.hidden) {
                return Err(Error::DimensionMismatch("MLP weight shape".into()));
            }
        }
        let o = &self.omega;
        let found = [o.sp.len(), o.sn.len(), o.tp.len(), o.tn.len(), o.balance_s.len(), o.balance_t.len()];
        if found != omega_lengths(c) {
            return Err(Error::DimensionMismatch(format!(
                "mixing weight lengths {found:?} do not match hop {}",
                c.hop
            )));
        }
        if self.head.weight.dim() != (c.embedding_dim(), c.num_clusters) || self.head.bias.len() != c.num_clusters {
            return Err(Error::DimensionMismatch("head shape".into()));
        }
        Ok(())
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Parameter tensors in a fixed order: MLP weights, mixing weights, head.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for m in &self.mlps {
            out.push(m.w1.as_slice().expect("standard layout"));
            out.push(m.w2.as_slice().expect("standard layout"));
        }
        let o = &self.omega;
        out.extend([&o.sp[..], &o.sn, &o.tp, &o.tn, &o.balance_s, &o.balance_t]);
        out.push(self.head.weight.as_slice().expect("standard layout"));
        out.push(self.head.bias.as_slice().expect("standard layout"));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for m in &mut self.mlps {
            out.push(m.w1.as_slice_mut().expect("standard layout"));
            out.push(m.w2.as_slice_mut().expect("standard layout"));
        }
        let o = &mut self.omega;
        out.extend([
            &mut o.sp[..],
            &mut o.sn[..],
            &mut o.tp[..],
            &mut o.tn[..],
            &mut o.balance_s[..],
            &mut o.balance_t[..],
        ]);
        out.push(self.head.weight.as_slice_mut().expect("standard layout"));
        out.push(self.head.bias.as_slice_mut().expect("standard layout"));
        out
    }

    pub fn sample_dropout(&self, n: usize, rng: &mut impl Rng) -> DropoutMasks {
        DropoutMasks(
            (0..self.config.num_channels())
                .map(|_| mlp::sample_mask(n, self.config.hidden, rng))
                .collect(),
        )
    }

    fn check_inputs(&self, x: &Array2<f64>, ch: &PreparedChannels) -> Result<()> {
        self.validate()?;
        if x.nrows() != ch.n() {
            return Err(Error::DimensionMismatch(format!("{} feature rows for {} nodes", x.nrows(), ch.n())));
        }
        if ch.directed() != self.config.directed {
            return Err(Error::InvalidParameter("model and channel directedness differ".into()));
        }
        Ok(())
    }

    /// Full forward pass. Passing dropout masks selects training behavior.
    pub fn forward(&self, x: &Array2<f64>, ch: &PreparedChannels, masks: Option<&DropoutMasks>) -> Result<ForwardPass> {
        self.check_inputs(x, ch)?;
        let mut hidden = Vec::with_capacity(self.mlps.len());
        let mut mlp_caches = Vec::with_capacity(self.mlps.len());
        for (i, m) in self.mlps.iter().enumerate() {
            let (h, cache) = m.forward(x, masks.map(|d| &d.0[i]))?;
            hidden.push(h);
            mlp_caches.push(cache);
        }
        let mut stats = AggregationStats::default();
        let mut blocks = Vec::with_capacity(hidden.len());
        let mut friend = Vec::new();
        let mut enemy = Vec::new();
        let o = &self.omega;
        let directions: Vec<(&DirectionOps, &[f64], &[f64], Option<f64>)> = match &ch.target {
            Some(t) => vec![
                (&ch.source, &o.sp, &o.sn, o.balance_s.first().copied()),
                (t, &o.tp, &o.tn, o.balance_t.first().copied()),
            ],
            None => vec![(&ch.source, &o.sp, &o.sn, o.balance_s.first().copied())],
        };
        for (dir, (ops, wf, we, wb)) in directions.into_iter().enumerate() {
            let (zp, ft) = friend_forward(ops, &hidden[2 * dir], wf, wb, &mut stats);
            let (zn, et) = enemy_forward(ops, &hidden[2 * dir + 1], self.config.hop, we, &mut stats);
            blocks.push(zp);
            blocks.push(zn);
            friend.push(ft);
            enemy.push(et);
        }
        let views: Vec<_> = blocks.iter().map(|b| b.view()).collect();
        let embedding = concatenate(Axis(1), &views).expect("blocks share row count");
        let assignment = self.head.forward(&embedding)?;
        Ok(ForwardPass {
            hidden,
            embedding,
            assignment,
            stats,
            mlp_caches,
            friend,
            enemy,
        })
    }

    /// Eval-mode prediction.
    pub fn predict(&self, x: &Array2<f64>, ch: &PreparedChannels) -> Result<ClusterAssignment> {
        Ok(self.forward(x, ch, None)?.assignment)
    }

    /// Reverse-mode gradients given `dL/dP` and an optional direct `dL/dZ`.
    pub fn backward(
        &self,
        x: &Array2<f64>,
        ch: &PreparedChannels,
        pass: &ForwardPass,
        d_probs: &Array2<f64>,
        d_embedding: Option<&Array2<f64>>,
    ) -> GradientTape {
        let mut grad = self.zeros_like();
        let mut dz = self
            .head
            .backward(&pass.embedding, &pass.assignment.probs, d_probs, &mut grad.head);
        if let Some(extra) = d_embedding {
            dz += extra;
        }
        let d = self.config.hidden;
        let o = &self.omega;
        let directions: Vec<(&DirectionOps, &[f64], &[f64], Option<f64>)> = match &ch.target {
            Some(t) => vec![
                (&ch.source, &o.sp, &o.sn, o.balance_s.first().copied()),
                (t, &o.tp, &o.tn, o.balance_t.first().copied()),
            ],
            None => vec![(&ch.source, &o.sp, &o.sn, o.balance_s.first().copied())],
        };
        for (dir, (ops, wf, we, wb)) in directions.into_iter().enumerate() {
            let dzp = dz.slice(s![.., 2 * dir * d..(2 * dir + 1) * d]).to_owned();
            let dzn = dz.slice(s![.., (2 * dir + 1) * d..(2 * dir + 2) * d]).to_owned();
            let (dhp, dwf, dwb) = friend_backward(ops, &pass.friend[dir], wf, wb, &dzp);
            let (dhn, dwe) = enemy_backward(ops, &pass.enemy[dir], self.config.hop, we, &dzn);
            let (gf, ge, gb) = if dir == 0 {
                (&mut grad.omega.sp, &mut grad.omega.sn, &mut grad.omega.balance_s)
            } else {
                (&mut grad.omega.tp, &mut grad.omega.tn, &mut grad.omega.balance_t)
            };
            *gf = dwf;
            *ge = dwe;
            if let Some(v) = dwb {
                *gb = vec![v];
            }
            self.mlps[2 * dir].backward(x, &pass.mlp_caches[2 * dir], &dhp, &mut grad.mlps[2 * dir]);
            self.mlps[2 * dir + 1].backward(x, &pass.mlp_caches[2 * dir + 1], &dhn, &mut grad.mlps[2 * dir + 1]);
        }
        grad
    }
}

/// Aggregation alone: `Z` from given hidden matrices `[H_s+, H_s-, (H_t+, H_t-)]`.
pub fn simpa_forward(ch: &PreparedChannels, hidden: &[Array2<f64>], model: &SimpaModel) -> Result<(Array2<f64>, AggregationStats)> {
    model.validate()?;
    if hidden.len() != model.config.num_channels() || ch.directed() != model.config.directed {
        return Err(Error::DimensionMismatch("hidden matrices do not match model channels".into()));
    }
    let o = &model.omega;
    let mut stats = AggregationStats::default();
    let mut blocks = Vec::new();
    let mut dirs = vec![(&ch.source, &o.sp, &o.sn, o.balance_s.first().copied())];
    if let Some(t) = &ch.target {
        dirs.push((t, &o.tp, &o.tn, o.balance_t.first().copied()));
    }
    for (dir, (ops, wf, we, wb)) in dirs.into_iter().enumerate() {
        let w = simpa::DirectionWeights {
            friend: wf,
            enemy: we,
            balance: wb,
        };
        let (zp, zn) = simpa::aggregate_direction(ops, &hidden[2 * dir], &hidden[2 * dir + 1], model.config.hop, &w, &mut stats)?;
        blocks.push(zp);
        blocks.push(zn);
    }
    let views: Vec<_> = blocks.iter().map(|b| b.view()).collect();
    Ok((concatenate(Axis(1), &views).expect("blocks share row count"), stats))
}
