//! Model JSON: `{"dim", "k", "weights", "means", "covariances"}` with
//! row-major, fully stored symmetric matrices.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gmm::GmmModel;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub dim: usize,
    pub k: usize,
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub covariances: Vec<Vec<Vec<f64>>>,
}

impl From<&GmmModel> for ModelFile {
    fn from(m: &GmmModel) -> Self {
        let d = m.dim();
        Self {
            dim: d,
            k: m.k(),
            weights: m.weights().to_vec(),
            means: m.means().iter().map(|v| v.iter().copied().collect()).collect(),
            covariances: m
                .covariances()
                .iter()
                .map(|c| (0..d).map(|r| (0..d).map(|col| c[(r, col)]).collect()).collect())
                .collect(),
        }
    }
}

impl TryFrom<ModelFile> for GmmModel {
    type Error = Error;

    fn try_from(f: ModelFile) -> Result<Self> {
        let d = f.dim;
        if f.weights.len() != f.k || f.means.len() != f.k || f.covariances.len() != f.k {
            return Err(Error::InvalidModel(format!("model file does not hold k = {} components", f.k)));
        }
        let mut means = Vec::with_capacity(f.k);
        let mut covs = Vec::with_capacity(f.k);
        for (mu, cov) in f.means.into_iter().zip(f.covariances) {
            if mu.len() != d || cov.len() != d || cov.iter().any(|r| r.len() != d) {
                return Err(Error::InvalidModel(format!("component shapes do not match dim = {d}")));
            }
            means.push(DVector::from_vec(mu));
            let flat: Vec<f64> = cov.into_iter().flatten().collect();
            covs.push(DMatrix::from_row_slice(d, d, &flat));
        }
        GmmModel::new(f.weights, means, covs)
    }
}

pub fn model_to_json(model: &GmmModel) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ModelFile::from(model))?)
}

pub fn model_from_json(text: &str) -> Result<GmmModel> {
    let file: ModelFile = serde_json::from_str(text)?;
    GmmModel::try_from(file)
}

pub fn save_model(model: &GmmModel, path: impl AsRef<Path>) -> Result<()> {
    let mut text = model_to_json(model)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<GmmModel> {
    model_from_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn json_schema_and_roundtrip() {
        let m = GmmModel::new(
            vec![0.25, 0.75],
            vec![dvector![1.0, 2.0], dvector![-3.0, 0.5]],
            vec![dmatrix![1.0, 0.3; 0.3, 2.0], dmatrix![0.1, 0.0; 0.0, 0.2]],
        )
        .unwrap();
        let text = model_to_json(&m).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["dim"], 2);
        assert_eq!(v["k"], 2);
        assert_eq!(v["covariances"][0][0][1], 0.3);
        assert_eq!(model_from_json(&text).unwrap(), m);
    }

    #[test]
    fn malformed_files_are_rejected() {
        assert!(model_from_json("{}").is_err());
        let wrong_k = r#"{"dim":1,"k":2,"weights":[1.0],"means":[[0.0]],"covariances":[[[1.0]]]}"#;
        assert!(model_from_json(wrong_k).is_err());
        let ragged = r#"{"dim":2,"k":1,"weights":[1.0],"means":[[0.0,0.0]],"covariances":[[[1.0],[0.0,1.0]]]}"#;
        assert!(model_from_json(ragged).is_err());
    }
}
