//! Two-layer bias-free MLP feature maps with inverted dropout.

use ndarray::{Array2, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DROPOUT_P: f64 = 0.5;

/// `relu(X W1) W2` with dropout between the layers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub w1: Array2<f64>,
    pub w2: Array2<f64>,
}

/// Intermediates kept for the backward pass.
#[derive(Clone, Debug)]
pub struct MlpCache {
    pre: Array2<f64>,
    dropped: Array2<f64>,
    mask: Option<Array2<f64>>,
}

/// A dropout mask whose entries are `0` or `1 / keep`.
pub fn sample_mask(rows: usize, cols: usize, rng: &mut impl Rng) -> Array2<f64> {
    let keep = 1.0 - DROPOUT_P;
    Array2::from_shape_simple_fn((rows, cols), || if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
}

impl Mlp {
    pub fn zeros(d_in: usize, d: usize) -> Self {
        Self {
            w1: Array2::zeros((d_in, d)),
            w2: Array2::zeros((d, d)),
        }
    }

    pub fn uniform(d_in: usize, d: usize, rng: &mut impl Rng) -> Self {
        Self {
            w1: uniform_matrix(d_in, d, rng),
            w2: uniform_matrix(d, d, rng),
        }
    }

    /// Forward pass; `mask` enables dropout (training) and must be `n x d`.
    pub fn forward(&self, x: &Array2<f64>, mask: Option<&Array2<f64>>) -> Result<(Array2<f64>, MlpCache)> {
        if x.ncols() != self.w1.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "features have {} columns, first layer expects {}",
                x.ncols(),
                self.w1.nrows()
            )));
        }
        let pre = x.dot(&self.w1);
        let mut dropped = pre.mapv(|v| v.max(0.0));
        if let Some(m) = mask {
            if m.dim() != dropped.dim() {
                return Err(Error::DimensionMismatch("dropout mask shape".into()));
            }
            dropped *= m;
        }
        let out = dropped.dot(&self.w2);
        Ok((
            out,
            MlpCache {
                pre,
                dropped,
                mask: mask.cloned(),
            },
        ))
    }

    /// Accumulates weight gradients into `grad` given `d out`.
    pub fn backward(&self, x: &Array2<f64>, cache: &MlpCache, d_out: &Array2<f64>, grad: &mut Mlp) {
        grad.w2 += &cache.dropped.t().dot(d_out);
        let mut d_hidden = d_out.dot(&self.w2.t());
        if let Some(m) = &cache.mask {
            d_hidden *= m;
        }
        Zip::from(&mut d_hidden).and(&cache.pre).for_each(|g, &p| {
            if p <= 0.0 {
                *g = 0.0;
            }
        });
        grad.w1 += &x.t().dot(&d_hidden);
    }
}

/// Entries uniform in `(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
pub fn uniform_matrix(fan_in: usize, fan_out: usize, rng: &mut impl Rng) -> Array2<f64> {
    let bound = 1.0 / (fan_in as f64).sqrt();
    Array2::from_shape_simple_fn((fan_in, fan_out), || rng.gen_range(-bound..bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use ndarray::array;

    #[test]
    fn zero_input_zero_output() {
        let mlp = Mlp::uniform(3, 4, &mut seeded(0));
        let (out, _) = mlp.forward(&Array2::zeros((5, 3)), None).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn relu_clips_negative() {
        let mlp = Mlp { w1: array![[1.0]], w2: array![[1.0]] };
        let (out, _) = mlp.forward(&array![[-2.0]], None).unwrap();
        assert_eq!(out, array![[0.0]]);
    }

    #[test]
    fn eval_is_deterministic() {
        let mlp = Mlp::uniform(3, 4, &mut seeded(0));
        let x = uniform_matrix(6, 3, &mut seeded(1));
        assert_eq!(mlp.forward(&x, None).unwrap().0, mlp.forward(&x, None).unwrap().0);
    }

    #[test]
    fn mask_values_are_inverted_keep() {
        let m = sample_mask(50, 10, &mut seeded(3));
        assert!(m.iter().all(|&v| v == 0.0 || v == 2.0));
        let kept = m.iter().filter(|&&v| v > 0.0).count();
        assert!((150..350).contains(&kept), "{kept}");
    }

    #[test]
    fn shape_mismatch_is_error() {
        let mlp = Mlp::zeros(3, 2);
        assert!(mlp.forward(&Array2::zeros((2, 4)), None).is_err());
    }
}
