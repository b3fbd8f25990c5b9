//! Versioned JSON model files.
//!
//! ```json
//! {
//!   "format": "gurukit-model",
//!   "version": 1,
//!   "algo": "guru",
//!   "params": { "sigma": 0.5, "eta0": 1.0 },
//!   "model": { "kind": "linear", "w": [..], "sigma": 0.5 }
//! }
//! ```
//!
//! `model.kind` is `linear`, `multiclass` or `kernel`. Kernel models store
//! the kernel, σ, the coefficient vector, the cached norm, the SHA-256 of
//! the training set and, optionally, an embedded copy of it. Floats are
//! written in shortest round-trip form, so save/load is lossless.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Task};
use crate::error::{Error, Result};
use crate::kernel::{KernelModel, KernelSpec};
use crate::robust::{LinearModel, MulticlassModel};

pub const FORMAT_NAME: &str = "gurukit-model";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedData {
    #[serde(default)]
    pub name: String,
    pub dim: usize,
    pub labels: Vec<i32>,
    /// Row-major.
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SavedModel {
    Linear {
        w: Vec<f64>,
        sigma: f64,
    },
    Multiclass {
        weights: Vec<Vec<f64>>,
        sigma: f64,
    },
    Kernel {
        kernel: KernelSpec,
        sigma: f64,
        alphas: Vec<f64>,
        nu: f64,
        train_hash: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        train: Option<EmbeddedData>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    /// Training algorithm name, e.g. `guru` or `svm`.
    pub algo: String,
    /// Hyperparameters echoed for reproducibility.
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub model: SavedModel,
}

impl ModelFile {
    fn wrap(algo: &str, params: BTreeMap<String, f64>, model: SavedModel) -> Self {
        Self {
            format: FORMAT_NAME.into(),
            version: FORMAT_VERSION,
            algo: algo.into(),
            params,
            model,
        }
    }

    pub fn linear(algo: &str, model: &LinearModel, params: BTreeMap<String, f64>) -> Self {
        Self::wrap(
            algo,
            params,
            SavedModel::Linear {
                w: model.w.clone(),
                sigma: model.sigma,
            },
        )
    }

    pub fn multiclass(algo: &str, model: &MulticlassModel, params: BTreeMap<String, f64>) -> Self {
        Self::wrap(
            algo,
            params,
            SavedModel::Multiclass {
                weights: model.weights.clone(),
                sigma: model.sigma,
            },
        )
    }

    /// With `embed_train = false` the training set must be supplied again
    /// when loading; it is matched against the stored hash.
    pub fn kernel(algo: &str, model: &KernelModel, params: BTreeMap<String, f64>, embed_train: bool) -> Self {
        let train = model.train();
        Self::wrap(
            algo,
            params,
            SavedModel::Kernel {
                kernel: model.kernel(),
                sigma: model.sigma(),
                alphas: model.alphas(),
                nu: model.nu(),
                train_hash: train.content_hash(),
                train: embed_train.then(|| EmbeddedData {
                    name: train.name().to_string(),
                    dim: train.dim(),
                    labels: train.labels().to_vec(),
                    features: train.features().to_vec(),
                }),
            },
        )
    }

    pub fn kind(&self) -> &'static str {
        match self.model {
            SavedModel::Linear { .. } => "linear",
            SavedModel::Multiclass { .. } => "multiclass",
            SavedModel::Kernel { .. } => "kernel",
        }
    }

    pub fn to_linear(&self) -> Result<LinearModel> {
        match &self.model {
            SavedModel::Linear { w, sigma } => LinearModel::new(w.clone(), *sigma),
            _ => Err(Error::Format(format!("expected a linear model, found {}", self.kind()))),
        }
    }

    pub fn to_multiclass(&self) -> Result<MulticlassModel> {
        match &self.model {
            SavedModel::Multiclass { weights, sigma } => MulticlassModel::new(weights.clone(), *sigma),
            _ => Err(Error::Format(format!("expected a multiclass model, found {}", self.kind()))),
        }
    }

    /// Rebuild a kernel model from the embedded training set, or from
    /// `train` when nothing is embedded.
    pub fn to_kernel(&self, train: Option<&Dataset>) -> Result<KernelModel> {
        let SavedModel::Kernel {
            kernel,
            sigma,
            alphas,
            nu,
            train_hash,
            train: embedded,
        } = &self.model
        else {
            return Err(Error::Format(format!("expected a kernel model, found {}", self.kind())));
        };
        let data = match (embedded, train) {
            (Some(e), _) => Dataset::from_flat(e.name.clone(), e.dim, e.features.clone(), e.labels.clone(), Task::Binary)?,
            (None, Some(d)) => d.clone(),
            (None, None) => {
                return Err(Error::Format(
                    "kernel model has no embedded training set; supply the training data".into(),
                ))
            }
        };
        if &data.content_hash() != train_hash {
            return Err(Error::Format("training set does not match the hash stored in the model".into()));
        }
        let mut model = KernelModel::from_parts(&data, *kernel, *sigma, alphas.clone())?;
        model.set_nu(*nu)?;
        Ok(model)
    }

    fn check_header(&self) -> Result<()> {
        if self.format != FORMAT_NAME {
            return Err(Error::Format(format!("not a model file (format `{}`)", self.format)));
        }
        if self.version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported model format version {} (this build reads {FORMAT_VERSION})",
                self.version
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        file.check_header()?;
        Ok(file)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, self).map_err(|e| Error::Format(e.to_string()))?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let r = BufReader::new(File::open(path)?);
        let file: ModelFile = serde_json::from_reader(r).map_err(|e| Error::Format(e.to_string()))?;
        file.check_header()?;
        Ok(file)
    }
}
