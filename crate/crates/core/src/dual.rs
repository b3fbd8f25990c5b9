//! Dual certificates for linear robust models.
//!
//! From a (near-)stationary `w` the dual variables are
//! `α_m = Φ((1 - y_m wᵀx_m) / (σ‖w‖))`. At an exact stationary point the
//! dual objective `Σα_m` equals the primal objective, the dual constraint
//! `‖Σ α_m y_m x_m‖ ≤ σ Σ f*(α_m)` is tight, and every sample recovers
//! `‖w‖` through `1 / (σ Φ⁻¹(α_m) + y_m ŵᵀx_m)`.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm};
use crate::linear::{batch_refine_with, check_sigma, robust_gradient_norm, robust_objective};
use crate::math::{gauss_cdf, gauss_cdf_inv, ScalarLoss};
use crate::robust::LinearModel;

/// Dual variables are kept inside `(ALPHA_CLAMP, 1 - ALPHA_CLAMP)`.
pub const ALPHA_CLAMP: f64 = 1e-15;
/// Norm estimates from samples with `min(α, 1 - α)` below this are too
/// ill-conditioned to count.
pub const ESTIMATE_MIN_TAIL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualCertificate {
    pub sigma: f64,
    pub alphas: Vec<f64>,
    /// Entries whose α had to be clamped into the open unit interval.
    pub clamped: Vec<bool>,
    /// `Σ α_m`
    pub dual_objective: f64,
    pub primal_objective: f64,
    /// `|dual - primal| / max(1, primal)`
    pub gap_rel: f64,
    /// `‖Σ α_m y_m x_m‖`
    pub constraint_lhs: f64,
    /// `σ Σ f*(α_m)`
    pub constraint_rhs: f64,
    pub weight_norm: f64,
    pub norm_estimates: Vec<NormEstimate>,
    pub grad_norm: f64,
    pub grad_tol: f64,
}

impl DualCertificate {
    /// Gradient norm of the primal was within `grad_tol`.
    pub fn stationary(&self) -> bool {
        self.grad_norm <= self.grad_tol
    }

    /// `lhs ≤ rhs` up to a relative slack.
    pub fn feasible(&self, rel_tol: f64) -> bool {
        self.constraint_lhs <= self.constraint_rhs * (1.0 + rel_tol) + rel_tol
    }

    /// `|lhs - rhs| / rhs`
    pub fn tightness(&self) -> f64 {
        (self.constraint_lhs - self.constraint_rhs).abs() / self.constraint_rhs
    }

    pub fn valid_estimates(&self) -> impl Iterator<Item = f64> + '_ {
        self.norm_estimates.iter().filter(|e| e.valid).map(|e| e.value)
    }

    /// Largest relative deviation of a valid norm estimate from `‖w‖`;
    /// `None` when no estimate is valid.
    pub fn norm_spread(&self) -> Option<f64> {
        self.valid_estimates()
            .map(|v| (v - self.weight_norm).abs() / self.weight_norm)
            .reduce(f64::max)
    }

    pub fn gap_flagged(&self, threshold: f64) -> bool {
        !(self.gap_rel < threshold)
    }
}

fn check(data: &Dataset, model: &LinearModel) -> Result<f64> {
    data.require_binary()?;
    Error::check_dim(model.dim(), data.dim())?;
    check_sigma(model.sigma)?;
    let wn = model.norm();
    if wn == 0.0 {
        return Err(Error::domain("certificates need a nonzero weight vector"));
    }
    Ok(wn)
}

/// `(α_m, clamped_m)` for every sample.
pub fn dual_variables(data: &Dataset, model: &LinearModel) -> Result<Vec<(f64, bool)>> {
    let wn = check(data, model)?;
    let r = model.sigma * wn;
    let mut out = Vec::with_capacity(data.len());
    for m in 0..data.len() {
        let z = (1.0 - data.y(m) * dot(&model.w, data.row(m))) / r;
        if !z.is_finite() {
            return Err(Error::NonFinite(format!("margin of sample {m}")));
        }
        let a = gauss_cdf(z);
        let c = a.clamp(ALPHA_CLAMP, 1.0 - ALPHA_CLAMP);
        out.push((c, c != a));
    }
    Ok(out)
}

/// Norm restoration `1 / (σ Φ⁻¹(α_m) + y_m dᵀx_m)` for a unit direction `d`.
///
/// An estimate is invalid when its denominator is not positive or when
/// `α_m` lies within [`ESTIMATE_MIN_TAIL`] of 0 or 1.
pub fn restore_norm_with(data: &Dataset, sigma: f64, alphas: &[f64], direction: &[f64]) -> Result<Vec<NormEstimate>> {
    Error::check_dim(data.len(), alphas.len())?;
    Error::check_dim(data.dim(), direction.len())?;
    let mut out = Vec::with_capacity(alphas.len());
    for (m, &a) in alphas.iter().enumerate() {
        let denom = sigma * gauss_cdf_inv(a)? + data.y(m) * dot(direction, data.row(m));
        let valid = denom > 0.0 && a.min(1.0 - a) >= ESTIMATE_MIN_TAIL;
        out.push(NormEstimate { value: 1.0 / denom, valid });
    }
    Ok(out)
}

/// Norm estimates from the dual side alone: the α of the model and the
/// direction `Σ α_m y_m x_m` that stationarity assigns to `ŵ`. The two
/// sides only agree at a stationary point.
pub fn restore_norm(data: &Dataset, model: &LinearModel) -> Result<Vec<NormEstimate>> {
    let alphas: Vec<f64> = dual_variables(data, model)?.into_iter().map(|p| p.0).collect();
    let dir = dual_direction(data, &alphas);
    let n = norm(&dir);
    if n == 0.0 {
        return Err(Error::domain("dual direction vanishes"));
    }
    let unit: Vec<f64> = dir.iter().map(|v| v / n).collect();
    restore_norm_with(data, model.sigma, &alphas, &unit)
}

fn dual_direction(data: &Dataset, alphas: &[f64]) -> Vec<f64> {
    let mut v = vec![0.0; data.dim()];
    for (m, a) in alphas.iter().enumerate() {
        axpy(a * data.y(m), data.row(m), &mut v);
    }
    v
}

/// Build the certificate for `model`; `grad_tol` is recorded alongside the
/// measured gradient norm so callers can tell a stationary certificate
/// from a diagnostic one.
pub fn build_certificate(data: &Dataset, model: &LinearModel, grad_tol: f64) -> Result<DualCertificate> {
    let wn = check(data, model)?;
    let pairs = dual_variables(data, model)?;
    let alphas: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let clamped: Vec<bool> = pairs.iter().map(|p| p.1).collect();
    let dual_objective: f64 = alphas.iter().sum();
    let primal_objective = robust_objective(data, &model.w, model.sigma);
    if !primal_objective.is_finite() {
        return Err(Error::NonFinite("primal objective".into()));
    }
    let mut rhs = 0.0;
    for &a in &alphas {
        rhs += ScalarLoss::Erf.conjugate(a)?;
    }
    let constraint_lhs = norm(&dual_direction(data, &alphas));
    Ok(DualCertificate {
        sigma: model.sigma,
        gap_rel: (dual_objective - primal_objective).abs() / primal_objective.max(1.0),
        dual_objective,
        primal_objective,
        constraint_lhs,
        constraint_rhs: model.sigma * rhs,
        weight_norm: wn,
        norm_estimates: restore_norm(data, model)?,
        grad_norm: robust_gradient_norm(data, &model.w, model.sigma),
        grad_tol,
        alphas,
        clamped,
    })
}

/// `gap_rel` at every iterate of a batch refinement, starting point
/// included.
pub fn gap_trajectory(
    data: &Dataset,
    model: &LinearModel,
    grad_tol: f64,
    max_iters: usize,
) -> Result<Vec<(usize, f64)>> {
    let sigma = model.sigma;
    let mut gaps = Vec::new();
    let mut failure = None;
    batch_refine_with(data, sigma, model, grad_tol, max_iters, |it, w| {
        if failure.is_some() {
            return;
        }
        let m = LinearModel { w: w.to_vec(), sigma };
        match build_certificate(data, &m, grad_tol) {
            Ok(c) => gaps.push((it, c.gap_rel)),
            Err(e) => failure = Some(e),
        }
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(gaps),
    }
}

/// Values of the dual constraint summand and its two elementary
/// approximations at one α.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeRow {
    pub alpha: f64,
    /// `f*(α) = φ(Φ⁻¹(α))`, peak `1/√(2π)`.
    pub s: f64,
    /// `s` rescaled to peak 1: `exp(-Φ⁻¹(α)²/2)`.
    pub s_unit: f64,
    /// Binary entropy in bits.
    pub s1: f64,
    /// `4α(1 - α)`
    pub s2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeReport {
    pub rows: Vec<ShapeRow>,
    /// Largest pairwise gap among `s_unit`, `s1`, `s2` over all rows.
    pub max_deviation: f64,
}

pub fn check_constraint_shapes(alphas: &[f64]) -> Result<ShapeReport> {
    let mut rows = Vec::with_capacity(alphas.len());
    let mut max_deviation = 0.0f64;
    for &a in alphas {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::domain(format!("alpha must lie in (0, 1), got {a}")));
        }
        let s = ScalarLoss::Erf.conjugate(a)?;
        let q = gauss_cdf_inv(a)?;
        let row = ShapeRow {
            alpha: a,
            s,
            s_unit: (-0.5 * q * q).exp(),
            s1: ScalarLoss::Log.conjugate(a)?,
            s2: ScalarLoss::Quad.conjugate(a)?,
        };
        max_deviation = max_deviation
            .max((row.s_unit - row.s1).abs())
            .max((row.s_unit - row.s2).abs())
            .max((row.s1 - row.s2).abs());
        rows.push(row);
    }
    Ok(ShapeReport { rows, max_deviation })
}
