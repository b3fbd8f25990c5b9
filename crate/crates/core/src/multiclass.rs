//! Multiclass training over the robust sum-of-hinges loss (M-GURU and the
//! single-vector variant M-GURU-S²), prediction, and the multiclass ASVC
//! loss.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm, sub};
use crate::linear::{check_sigma, sample_index, StopRule, TrainConfig};
use crate::robust::{
    multiclass_sum_gradient, multiclass_sum_gradients_raw, multiclass_sum_loss_raw, MulticlassModel,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulticlassTrainReport {
    pub final_model: MulticlassModel,
    pub objective_trace: Vec<(usize, f64)>,
    pub iterations_run: usize,
    pub converged: bool,
    /// Single-vector updates applied to each class (S² variant only;
    /// all zeros for M-GURU, which moves every vector each step).
    pub class_updates: Vec<usize>,
}

fn check_data(data: &Dataset, model_dim: Option<usize>) -> Result<usize> {
    let classes = data.require_multiclass()?;
    if let Some(d) = model_dim {
        Error::check_dim(d, data.dim())?;
    }
    Ok(classes)
}

/// `Σ_m Σ_{r ≠ y_m} ℓ(x_m, +1; w_{y_m} - w_r, σ²)`; equals `M·(C-1)` at
/// all-zero weights.
pub fn multiclass_objective(data: &Dataset, model: &MulticlassModel) -> Result<f64> {
    check_data(data, Some(model.dim()))?;
    if data.classes() != model.classes() {
        return Err(Error::InvalidData(format!(
            "dataset has {} classes, model has {}",
            data.classes(),
            model.classes()
        )));
    }
    Ok(objective_raw(data, model))
}

fn objective_raw(data: &Dataset, model: &MulticlassModel) -> f64 {
    (0..data.len())
        .map(|m| multiclass_sum_loss_raw(model, data.row(m), data.class_index(m)))
        .sum()
}

#[derive(Clone, Copy)]
enum Variant {
    AllClasses,
    OneClass,
}

/// M-GURU: per sampled point, every class vector takes a step along its
/// gradient, all evaluated at the same pre-step weights.
pub fn train_m_guru(data: &Dataset, sigma: f64, cfg: &TrainConfig) -> Result<MulticlassTrainReport> {
    train(data, sigma, cfg, Variant::AllClasses)
}

/// M-GURU-S²: per iteration a sample and then a class `r` (uniform over all
/// classes) are drawn, and only `w_r` is updated.
pub fn train_m_guru_s2(data: &Dataset, sigma: f64, cfg: &TrainConfig) -> Result<MulticlassTrainReport> {
    train(data, sigma, cfg, Variant::OneClass)
}

fn train(data: &Dataset, sigma: f64, cfg: &TrainConfig, variant: Variant) -> Result<MulticlassTrainReport> {
    check_sigma(sigma)?;
    cfg.validate()?;
    let classes = check_data(data, None)?;
    let mut model = MulticlassModel::zeros(classes, data.dim(), sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut stop = StopRule::new(cfg.epsilon, objective_raw(data, &model));
    let mut class_updates = vec![0usize; classes];
    let mut converged = false;
    let mut t = 0;
    while t < cfg.max_iters {
        t += 1;
        let i = sample_index(&mut rng, data.len());
        let (x, y) = (data.row(i), data.class_index(i));
        let eta = cfg.step(t);
        match variant {
            Variant::AllClasses => {
                let grads = multiclass_sum_gradients_raw(&model, x, y);
                for (w, g) in model.weights.iter_mut().zip(&grads) {
                    axpy(-eta, g, w);
                }
            }
            Variant::OneClass => {
                let r = rng.random_range(0..classes as u64) as usize;
                let g = multiclass_sum_gradient(&model, x, y, r)?;
                axpy(-eta, &g, &mut model.weights[r]);
                class_updates[r] += 1;
            }
        }
        if t % cfg.eval_period == 0 && stop.record(t, objective_raw(data, &model))? {
            converged = true;
            break;
        }
    }
    if stop.trace.last().map(|p| p.0) != Some(t) {
        stop.record(t, objective_raw(data, &model))?;
    }
    Ok(MulticlassTrainReport {
        final_model: model,
        objective_trace: stop.trace,
        iterations_run: t,
        converged,
        class_updates,
    })
}

/// `argmax_y w_yᵀx` as a 0-based class index; ties go to the lowest index.
pub fn multiclass_predict(model: &MulticlassModel, x: &[f64]) -> Result<usize> {
    Error::check_dim(model.dim(), x.len())?;
    let mut best = (0, f64::NEG_INFINITY);
    for (c, w) in model.weights.iter().enumerate() {
        let s = dot(w, x);
        if s > best.1 {
            best = (c, s);
        }
    }
    Ok(best.0)
}

pub fn multiclass_accuracy(model: &MulticlassModel, data: &Dataset) -> Result<f64> {
    check_data(data, Some(model.dim()))?;
    let mut hits = 0usize;
    for m in 0..data.len() {
        if multiclass_predict(model, data.row(m))? == data.class_index(m) {
            hits += 1;
        }
    }
    Ok(hits as f64 / data.len() as f64)
}

/// Worst case over single-point displacements of norm `δ` of the
/// multi-hinge: `max(0, max_{r ≠ y} [1 - (w_y - w_r)ᵀx + δ‖w_y - w_r‖])`.
/// The `r = y` term is the zero self-margin. `y` is 0-based.
pub fn multiclass_asvc_loss(model: &MulticlassModel, delta: f64, x: &[f64], y: usize) -> Result<f64> {
    model.check(x, y)?;
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidConfig(format!("delta must be nonnegative, got {delta}")));
    }
    let wy = &model.weights[y];
    let mut worst = 0.0f64;
    for (r, wr) in model.weights.iter().enumerate() {
        if r == y {
            continue;
        }
        let diff = sub(wy, wr);
        let pen = if delta > 0.0 { delta * norm(&diff) } else { 0.0 };
        worst = worst.max(1.0 - dot(&diff, x) + pen);
    }
    Ok(worst)
}
