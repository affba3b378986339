//! Triplet sampling over seed nodes.

use rand::Rng;

use super::losses::Triplet;

/// Cycles over valid anchors (seeds whose cluster has another seed while some
/// other cluster has a seed) until `cap` triplets exist, drawing the positive and
/// negative partners uniformly.
pub fn sample_triplets(seeds: &[usize], labels: &[usize], cap: usize, rng: &mut impl Rng) -> Vec<Triplet> {
    let k = seeds.iter().map(|&s| labels[s] + 1).max().unwrap_or(0);
    let mut by_cluster = vec![Vec::new(); k];
    for &s in seeds {
        by_cluster[labels[s]].push(s);
    }
    let anchors: Vec<usize> = seeds
        .iter()
        .copied()
        .filter(|&s| {
            let c = labels[s];
            by_cluster[c].len() >= 2 && by_cluster[c].len() < seeds.len()
        })
        .collect();
    if anchors.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(cap);
    for idx in 0..cap {
        let a = anchors[idx % anchors.len()];
        let own = &by_cluster[labels[a]];
        let pos = loop {
            let cand = own[rng.gen_range(0..own.len())];
            if cand != a {
                break cand;
            }
        };
        let others = seeds.len() - own.len();
        let mut pick = rng.gen_range(0..others);
        let mut neg = a;
        for (c, members) in by_cluster.iter().enumerate() {
            if c == labels[a] {
                continue;
            }
            if pick < members.len() {
                neg = members[pick];
                break;
            }
            pick -= members.len();
        }
        out.push((a, pos, neg));
    }
    out
}
