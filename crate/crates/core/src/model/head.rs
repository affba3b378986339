//! Linear layer plus row softmax mapping embeddings to cluster probabilities.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mlp::uniform_matrix;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Head {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Row-stochastic probabilities and their argmax labels.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterAssignment {
    pub probs: Array2<f64>,
    pub labels: Vec<usize>,
}

impl Head {
    pub fn zeros(d_in: usize, k: usize) -> Self {
        Self {
            weight: Array2::zeros((d_in, k)),
            bias: Array1::zeros(k),
        }
    }

    pub fn uniform(d_in: usize, k: usize, rng: &mut impl Rng) -> Self {
        let weight = uniform_matrix(d_in, k, rng);
        let bound = 1.0 / (d_in as f64).sqrt();
        let bias = Array1::from_shape_simple_fn(k, || rng.gen_range(-bound..bound));
        Self { weight, bias }
    }

    pub fn logits(&self, z: &Array2<f64>) -> Result<Array2<f64>> {
        if z.ncols() != self.weight.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "embedding has {} columns, head expects {}",
                z.ncols(),
                self.weight.nrows()
            )));
        }
        Ok(z.dot(&self.weight) + &self.bias)
    }

    pub fn forward(&self, z: &Array2<f64>) -> Result<ClusterAssignment> {
        let probs = softmax_rows(&self.logits(z)?)?;
        let labels = argmax_rows(&probs);
        Ok(ClusterAssignment { probs, labels })
    }

    /// Given `dL/dP`, accumulates head gradients and returns `dL/dZ`.
    pub fn backward(&self, z: &Array2<f64>, probs: &Array2<f64>, d_probs: &Array2<f64>, grad: &mut Head) -> Array2<f64> {
        let d_logits = softmax_backward(probs, d_probs);
        grad.weight += &z.t().dot(&d_logits);
        grad.bias += &d_logits.sum_axis(Axis(0));
        d_logits.dot(&self.weight.t())
    }
}

/// Numerically stable row softmax.
pub fn softmax_rows(logits: &Array2<f64>) -> Result<Array2<f64>> {
    if let Some(pos) = logits.iter().position(|v| !v.is_finite()) {
        let k = logits.ncols().max(1);
        return Err(Error::NonFinite(format!("logit at row {}", pos / k)));
    }
    let mut p = logits.clone();
    for mut row in p.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let s = row.sum();
        row /= s;
    }
    Ok(p)
}

/// `dL/dlogits` for `P = softmax(logits)` row by row.
pub fn softmax_backward(probs: &Array2<f64>, d_probs: &Array2<f64>) -> Array2<f64> {
    let mut out = probs * d_probs;
    for (mut row, p) in out.rows_mut().into_iter().zip(probs.rows()) {
        let s = row.sum();
        row.scaled_add(-s, &p);
    }
    out
}

/// Per-row argmax; ties go to the smallest index.
pub fn argmax_rows(m: &Array2<f64>) -> Vec<usize> {
    m.rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zero_logits_uniform() {
        let p = softmax_rows(&Array2::zeros((1, 4))).unwrap();
        assert!(p.iter().all(|&v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn argmax_and_ties() {
        assert_eq!(argmax_rows(&array![[10.0, 0.0, 0.0], [1.0, 3.0, 3.0]]), vec![0, 1]);
    }

    #[test]
    fn shift_invariance() {
        let a = array![[0.3, -1.2, 2.0]];
        let b = &a + 7.5;
        let (pa, pb) = (softmax_rows(&a).unwrap(), softmax_rows(&b).unwrap());
        for (x, y) in pa.iter().zip(&pb) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn non_finite_rejected() {
        assert!(softmax_rows(&array![[0.0, f64::NAN]]).is_err());
        assert!(softmax_rows(&array![[0.0, f64::INFINITY]]).is_err());
    }
}
