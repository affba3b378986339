//! Lloyd's k-means with k-means++ seeding and restarts.

use ndarray::{Array2, ArrayView2};
use rand::Rng;

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct KMeansOptions {
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop when the relative inertia decrease falls below this.
    pub tol: f64,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iter: 300,
            tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub centroids: Array2<f64>,
    pub inertia: f64,
    /// Inertia after each assignment step of the winning restart.
    pub inertia_trace: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn row(points: &ArrayView2<f64>, i: usize) -> Vec<f64> {
    points.row(i).to_vec()
}

fn plus_plus(points: &ArrayView2<f64>, k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = points.nrows();
    let mut centers = vec![row(points, rng.gen_range(0..n))];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(&row(points, i), &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.gen_range(0..n)
        };
        let c = row(points, pick);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(&row(points, i), &c));
        }
        centers.push(c);
    }
    centers
}

fn assign(points: &[Vec<f64>], centers: &[Vec<f64>], labels: &mut [usize], dists: &mut [f64]) -> f64 {
    let mut inertia = 0.0;
    for (i, p) in points.iter().enumerate() {
        let mut best = (f64::INFINITY, 0);
        for (c, center) in centers.iter().enumerate() {
            let d = sq_dist(p, center);
            if d < best.0 {
                best = (d, c);
            }
        }
        labels[i] = best.1;
        dists[i] = best.0;
        inertia += best.0;
    }
    inertia
}

fn lloyd(points: &[Vec<f64>], mut centers: Vec<Vec<f64>>, opts: &KMeansOptions) -> (Vec<usize>, Vec<Vec<f64>>, f64, Vec<f64>) {
    let n = points.len();
    let k = centers.len();
    let dim = points[0].len();
    let mut labels = vec![0; n];
    let mut dists = vec![0.0; n];
    let mut inertia = assign(points, &centers, &mut labels, &mut dists);
    let mut trace = vec![inertia];
    for _ in 0..opts.max_iter {
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(p) {
                *s += x;
            }
        }
        // Empty clusters take the points farthest from their current centroid.
        let mut taken = vec![false; n];
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..n)
                    .filter(|&i| !taken[i])
                    .max_by(|&a, &b| dists[a].partial_cmp(&dists[b]).unwrap().then(b.cmp(&a)))
                    .unwrap_or(0);
                taken[far] = true;
                dists[far] = 0.0;
                centers[c] = points[far].clone();
            } else {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        let next = assign(points, &centers, &mut labels, &mut dists);
        trace.push(next);
        let converged = inertia - next <= opts.tol * inertia.max(f64::MIN_POSITIVE);
        inertia = next;
        if converged {
            break;
        }
    }
    (labels, centers, inertia, trace)
}

/// Clusters the rows of `points` into `k` groups, keeping the restart with the
/// lowest inertia (first on ties).
pub fn kmeans(points: &ArrayView2<f64>, k: usize, opts: &KMeansOptions, rng: &mut impl Rng) -> Result<KMeansResult> {
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("k-means with k={k} on {n} points")));
    }
    if points.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("k-means input".into()));
    }
    let owned: Vec<Vec<f64>> = (0..n).map(|i| row(points, i)).collect();
    let mut best: Option<KMeansResult> = None;
    for _ in 0..opts.restarts.max(1) {
        let init = plus_plus(points, k, rng);
        let (labels, centers, inertia, trace) = lloyd(&owned, init, opts);
        if best.as_ref().map_or(true, |b| inertia < b.inertia) {
            let dim = points.ncols();
            best = Some(KMeansResult {
                labels,
                centroids: Array2::from_shape_fn((k, dim), |(c, j)| centers[c][j]),
                inertia,
                inertia_trace: trace,
            });
        }
    }
    Ok(best.expect("at least one restart"))
}
