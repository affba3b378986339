//! Loading real networks from disk.

use ndarray::{Array2, Axis};
use sssnet::io;
use sssnet::SignedGraph;

use crate::config::FileSource;
use crate::error::{BenchError, Result};

/// A loaded network restricted to its largest connected component.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub graph: SignedGraph,
    /// Cluster ids relabeled to `0..num_clusters` in increasing order of the
    /// original ids.
    pub labels: Option<Vec<usize>>,
    pub attributes: Option<Array2<f64>>,
    /// Original node id of every kept node.
    pub node_ids: Vec<usize>,
    pub num_clusters: Option<usize>,
}

/// Reads the edge list or correlation matrix, optional labels and attributes,
/// then keeps the largest connected component and applies the degree filter.
pub fn load_dataset(src: &FileSource) -> Result<Dataset> {
    let graph = match (&src.edges, &src.correlation) {
        (Some(p), None) => io::read_edge_list(p, None, src.directed)?,
        (None, Some(p)) => io::read_correlation_csv(p)?,
        _ => return Err(BenchError::Config("set exactly one of edges and correlation".into())),
    };
    let n = graph.n();
    let labels = src.labels.as_deref().map(|p| io::read_labels(p, n)).transpose()?;
    let attributes = src.attributes.as_deref().map(|p| io::read_attributes(p, n)).transpose()?;

    let (mut graph, mut kept) = graph.largest_connected_component()?;
    if let Some(d) = src.min_degree {
        let (g, inner) = graph.filter_min_degree(d);
        kept = inner.iter().map(|&i| kept[i]).collect();
        graph = g;
        // The filter can split the component again.
        let (g, inner) = graph.largest_connected_component()?;
        kept = inner.iter().map(|&i| kept[i]).collect();
        graph = g;
    }

    let labels = labels.map(|l| compact_labels(&kept.iter().map(|&i| l[i]).collect::<Vec<_>>()));
    let attributes = attributes.map(|a| a.select(Axis(0), &kept));
    let num_clusters = labels.as_ref().map(|l| l.iter().max().map_or(0, |m| m + 1));
    Ok(Dataset {
        graph,
        labels,
        attributes,
        node_ids: kept,
        num_clusters,
    })
}

fn compact_labels(raw: &[usize]) -> Vec<usize> {
    let mut ids: Vec<usize> = raw.to_vec();
    ids.sort_unstable();
    ids.dedup();
    raw.iter().map(|c| ids.binary_search(c).expect("id present")).collect()
}
