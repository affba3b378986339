//! Reverse-mode gradients against central finite differences.

use ndarray::Array2;
use rand::Rng;
use sssnet::model::{init_model, ModelConfig, PreparedChannels};
use sssnet::rng::seeded;
use sssnet::train::{make_split, sample_triplets, Objective, SplitFractions, TrainConfig};
use sssnet::SignedGraph;

const STEP: f64 = 1e-5;

fn random_digraph(n: usize, density: f64, seed: u64) -> SignedGraph {
    let mut rng = seeded(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.gen::<f64>() < density {
                let w = rng.gen_range(0.2..1.5) * if rng.gen::<bool>() { 1.0 } else { -1.0 };
                edges.push((i, j, w));
            }
        }
    }
    SignedGraph::from_edges(n, &edges, true).unwrap()
}

struct Instance {
    graph: SignedGraph,
    x: Array2<f64>,
    labels: Vec<usize>,
    cfg: ModelConfig,
}

fn instance(seed: u64, directed: bool, balance: bool) -> Instance {
    let n = 30;
    let mut graph = random_digraph(n, 0.15, seed);
    if !directed {
        graph = graph.symmetrize();
    }
    let mut rng = seeded(seed ^ 0xABCD);
    let x = Array2::from_shape_simple_fn((n, 5), || rng.gen_range(-1.0..1.0));
    let labels: Vec<usize> = (0..n).map(|i| i % 3).collect();
    let cfg = ModelConfig {
        d_in: 5,
        hidden: 8,
        num_clusters: 3,
        hop: 2,
        directed,
        balance,
    };
    Instance { graph, x, labels, cfg }
}

/// Largest relative error over all parameters, `|a - b| / max(|a|, |b|, floor)`.
fn max_relative_error(inst: &Instance, seed: u64, floor: f64) -> (f64, usize) {
    let model = init_model(inst.cfg.clone(), seed).unwrap();
    let ch = PreparedChannels::from_graph(&inst.graph, 0.5, 0.0).unwrap();
    let split = make_split(&inst.labels, SplitFractions::default(), 0.5, &mut seeded(seed)).unwrap();
    let tc = TrainConfig { alpha: 0.1, ..Default::default() };
    let objective = Objective::new(&inst.graph, &split, Some(&inst.labels), &tc).unwrap();
    let masks = model.sample_dropout(inst.graph.n(), &mut seeded(seed + 1));
    let triplets = sample_triplets(&split.seeds, &inst.labels, 40, &mut seeded(seed + 2));
    assert!(!triplets.is_empty());
    let (_, grad) = objective.loss_and_gradient(&model, &inst.x, &ch, Some(&masks), &triplets).unwrap();
    let analytic: Vec<f64> = grad.tensors().concat();

    let loss_at = |m: &sssnet::model::SimpaModel| -> f64 {
        let pass = m.forward(&inst.x, &ch, Some(&masks)).unwrap();
        objective.evaluate(&pass, &triplets).unwrap().0.total
    };
    let mut worst = 0.0f64;
    let mut count = 0;
    let mut probe = model.clone();
    let sizes: Vec<usize> = model.tensors().iter().map(|t| t.len()).collect();
    let mut flat = 0;
    for (t, &len) in sizes.iter().enumerate() {
        for i in 0..len {
            let orig = probe.tensors()[t][i];
            probe.tensors_mut()[t][i] = orig + STEP;
            let up = loss_at(&probe);
            probe.tensors_mut()[t][i] = orig - STEP;
            let down = loss_at(&probe);
            probe.tensors_mut()[t][i] = orig;
            let fd = (up - down) / (2.0 * STEP);
            let a = analytic[flat];
            let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(floor);
            worst = worst.max(rel);
            flat += 1;
            count += 1;
        }
    }
    (worst, count)
}

#[test]
fn gradients_match_finite_differences() {
    for seed in 0..10 {
        let inst = instance(seed, true, false);
        let (worst, count) = max_relative_error(&inst, seed, 1e-6);
        println!("seed {seed}: {count} parameters, worst relative error {worst:.3e}");
        assert!(worst < 1e-4, "seed {seed}: {worst}");
    }
}

#[test]
fn balance_variant_gradients() {
    for (seed, directed) in [(20, true), (21, false)] {
        let inst = instance(seed, directed, true);
        let (worst, _) = max_relative_error(&inst, seed, 1e-6);
        assert!(worst < 1e-4, "seed {seed}: {worst}");
    }
}

#[test]
fn undirected_gradients() {
    let inst = instance(30, false, false);
    let (worst, _) = max_relative_error(&inst, 30, 1e-6);
    assert!(worst < 1e-4, "{worst}");
}
