//! Gaussian-robust linear and kernel classification.
//!
//! The robust hinge loss `σ‖w‖ f((1 - y wᵀx) / (σ‖w‖))`, with
//! `f(z) = zΦ(z) + φ(z)`, is the worst-case expected hinge loss when each
//! sample is perturbed by zero-mean Gaussian noise whose covariance has
//! trace at most σ². This crate provides the loss and its relatives,
//! SGD trainers for linear, kernel and multiclass models, the ASVC
//! baseline, and a dual certificate that checks a trained linear model
//! against the duality identities.
//!
//! All randomness comes from `ChaCha8Rng` seeded with a `u64`.

pub mod data;
pub mod dual;
pub mod error;
pub mod kernel;
pub mod linalg;
pub mod linear;
pub mod math;
pub mod model_io;
pub mod multiclass;
pub mod robust;

pub use data::{Dataset, SplitSpec, Task, ToyKind};
pub use dual::{build_certificate, DualCertificate};
pub use error::{Error, Result};
pub use kernel::{KernelModel, KernelSpec};
pub use linear::{train_asvc, train_baseline_svm, train_guru, batch_refine, TrainConfig, TrainReport};
pub use math::ScalarLoss;
pub use model_io::ModelFile;
pub use multiclass::{train_m_guru, train_m_guru_s2, MulticlassTrainReport};
pub use robust::{CovarianceChoice, CovarianceConstraint, LinearModel, MulticlassModel};
