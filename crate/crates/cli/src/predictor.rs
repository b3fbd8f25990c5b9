use gurukit_core::kernel::{kernel_accuracy, kernel_predict};
use gurukit_core::linear::linear_accuracy;
use gurukit_core::model_io::ModelFile;
use gurukit_core::multiclass::{multiclass_accuracy, multiclass_predict};
use gurukit_core::{Dataset, KernelModel, LinearModel, MulticlassModel};

use crate::error::Result;

/// A loaded model of any kind.
#[derive(Debug, Clone)]
pub enum Predictor {
    Linear(LinearModel),
    Multiclass(MulticlassModel),
    Kernel(KernelModel),
}

impl Predictor {
    /// Kernel files without an embedded training set need `train`.
    pub fn from_file(file: &ModelFile, train: Option<&Dataset>) -> Result<Self> {
        Ok(match file.kind() {
            "linear" => Predictor::Linear(file.to_linear()?),
            "multiclass" => Predictor::Multiclass(file.to_multiclass()?),
            _ => Predictor::Kernel(file.to_kernel(train)?),
        })
    }

    /// Predicted label: ±1 for binary models, 1..C for multiclass.
    pub fn predict(&self, x: &[f64]) -> Result<i32> {
        Ok(match self {
            Predictor::Linear(m) => m.predict(x)?,
            Predictor::Multiclass(m) => multiclass_predict(m, x)? as i32 + 1,
            Predictor::Kernel(m) => {
                if kernel_predict(m, x)? >= 0.0 {
                    1
                } else {
                    -1
                }
            }
        })
    }

    /// Decision value for binary models.
    pub fn decision(&self, x: &[f64]) -> Result<Option<f64>> {
        Ok(match self {
            Predictor::Linear(m) => Some(m.decision(x)?),
            Predictor::Multiclass(_) => None,
            Predictor::Kernel(m) => Some(kernel_predict(m, x)?),
        })
    }

    pub fn accuracy(&self, data: &Dataset) -> Result<f64> {
        Ok(match self {
            Predictor::Linear(m) => linear_accuracy(m, data)?,
            Predictor::Multiclass(m) => multiclass_accuracy(m, data)?,
            Predictor::Kernel(m) => kernel_accuracy(m, data)?,
        })
    }

    /// `‖w‖`, the Frobenius norm of the class vectors, or the cached kernel
    /// norm `ν`.
    pub fn norm(&self) -> f64 {
        match self {
            Predictor::Linear(m) => m.norm(),
            Predictor::Multiclass(m) => m.weights.iter().flatten().map(|v| v * v).sum::<f64>().sqrt(),
            Predictor::Kernel(m) => m.nu(),
        }
    }
}
