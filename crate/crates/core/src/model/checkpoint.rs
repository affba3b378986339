//! JSON checkpoints.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{Head, Mlp, ModelConfig, OmegaSet, SimpaModel};
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: &str = "sssnet-ckpt-v1";

/// Row-major matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MatrixRecord {
    fn from_array(a: &Array2<f64>) -> Self {
        Self {
            rows: a.nrows(),
            cols: a.ncols(),
            data: a.iter().copied().collect(),
        }
    }

    fn into_array(self) -> Result<Array2<f64>> {
        Array2::from_shape_vec((self.rows, self.cols), self.data)
            .map_err(|e| Error::DimensionMismatch(format!("checkpoint matrix: {e}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpRecord {
    pub w1: MatrixRecord,
    pub w2: MatrixRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub version: String,
    pub config: ModelConfig,
    /// In channel order s+, s-, t+, t-.
    pub mlps: Vec<MlpRecord>,
    pub omega: OmegaSet,
    pub head_weight: MatrixRecord,
    pub head_bias: Vec<f64>,
}

impl Checkpoint {
    pub fn from_model(model: &SimpaModel) -> Self {
        Self {
            version: CHECKPOINT_VERSION.to_string(),
            config: model.config.clone(),
            mlps: model
                .mlps
                .iter()
                .map(|m| MlpRecord {
                    w1: MatrixRecord::from_array(&m.w1),
                    w2: MatrixRecord::from_array(&m.w2),
                })
                .collect(),
            omega: model.omega.clone(),
            head_weight: MatrixRecord::from_array(&model.head.weight),
            head_bias: model.head.bias.to_vec(),
        }
    }

    pub fn into_model(self) -> Result<SimpaModel> {
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::InvalidParameter(format!("unsupported checkpoint version {:?}", self.version)));
        }
        let mlps = self
            .mlps
            .into_iter()
            .map(|r| {
                Ok(Mlp {
                    w1: r.w1.into_array()?,
                    w2: r.w2.into_array()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let model = SimpaModel {
            config: self.config,
            mlps,
            omega: self.omega,
            head: Head {
                weight: self.head_weight.into_array()?,
                bias: Array1::from(self.head_bias),
            },
        };
        model.validate()?;
        Ok(model)
    }
}

pub fn to_json(model: &SimpaModel) -> Result<String> {
    Ok(serde_json::to_string_pretty(&Checkpoint::from_model(model))?)
}

pub fn from_json(text: &str) -> Result<SimpaModel> {
    serde_json::from_str::<Checkpoint>(text)?.into_model()
}

pub fn save(model: &SimpaModel, path: &Path) -> Result<()> {
    fs::write(path, to_json(model)?)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<SimpaModel> {
    from_json(&fs::read_to_string(path)?)
}
