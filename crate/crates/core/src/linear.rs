//! Linear binary trainers: GURU (SGD on the robust hinge), a hinge + L2
//! SGD baseline, the ASVC alternating solver, and a second-order batch
//! refinement used before dual certification.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm, scale};
use crate::math::{gauss_cdf, gauss_pdf};
use crate::robust::{
    add_robust_gradient, asvc_displacement, asvc_hinge_raw, hinge, robust_hinge_raw, LinearModel,
};

/// SGD settings shared by every stochastic trainer.
///
/// The full objective is evaluated every `eval_period` updates; training
/// stops once two consecutive evaluations differ by less than
/// `epsilon · (1 + |objective|)`, or after `max_iters` updates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub eta0: f64,
    pub epsilon: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub eval_period: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            eta0: 1.0,
            epsilon: 1e-5,
            max_iters: 20_000,
            seed: 0,
            eval_period: 200,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta0 > 0.0 && self.eta0.is_finite()) {
            return Err(Error::InvalidConfig(format!("eta0 must be positive, got {}", self.eta0)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if self.eval_period == 0 {
            return Err(Error::InvalidConfig("eval_period must be at least 1".into()));
        }
        Ok(())
    }

    /// Step size at update `t` (counted from 1).
    #[inline]
    pub fn step(&self, t: usize) -> f64 {
        self.eta0 / (t as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub final_model: LinearModel,
    /// `(updates so far, full objective)`; starts with the initial point.
    pub objective_trace: Vec<(usize, f64)>,
    pub iterations_run: usize,
    pub converged: bool,
}

/// Uniform sample index in `0..m`, drawn through a `u64` range so the
/// stream does not depend on the platform's pointer width.
#[inline]
pub(crate) fn sample_index(rng: &mut ChaCha8Rng, m: usize) -> usize {
    rng.random_range(0..m as u64) as usize
}

pub(crate) fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("sigma must be positive, got {sigma}")))
    }
}

/// Tracks the periodic objective evaluations and the stopping rule.
pub(crate) struct StopRule {
    epsilon: f64,
    pub(crate) trace: Vec<(usize, f64)>,
}

impl StopRule {
    pub(crate) fn new(epsilon: f64, initial: f64) -> Self {
        Self {
            epsilon,
            trace: vec![(0, initial)],
        }
    }

    /// Record an evaluation; returns true when training should stop.
    pub(crate) fn record(&mut self, t: usize, objective: f64) -> Result<bool> {
        if !objective.is_finite() {
            return Err(Error::NonFinite(format!("objective at update {t}")));
        }
        let prev = self.trace.last().map_or(f64::INFINITY, |p| p.1);
        self.trace.push((t, objective));
        Ok((prev - objective).abs() < self.epsilon * (1.0 + objective.abs()))
    }
}

fn check_linear(data: &Dataset, dim: usize) -> Result<()> {
    data.require_binary()?;
    Error::check_dim(dim, data.dim())
}

/// GURU objective: `Σ_m ℓ(x_m, y_m; w, σ²)`. Equals `M` at `w = 0`.
pub fn robust_objective(data: &Dataset, w: &[f64], sigma: f64) -> f64 {
    (0..data.len())
        .map(|m| robust_hinge_raw(w, sigma, data.row(m), data.y(m)))
        .sum()
}

pub fn robust_objective_gradient(data: &Dataset, w: &[f64], sigma: f64) -> Vec<f64> {
    let mut g = vec![0.0; w.len()];
    for m in 0..data.len() {
        add_robust_gradient(w, sigma, data.row(m), data.y(m), 1.0, &mut g);
    }
    g
}

/// `(λ/2)‖w‖² + Σ_m [1 - y_m wᵀx_m]_+`
pub fn svm_objective(data: &Dataset, w: &[f64], lambda: f64) -> f64 {
    0.5 * lambda * dot(w, w)
        + (0..data.len())
            .map(|m| hinge(w, data.row(m), data.y(m)))
            .sum::<f64>()
}

/// `(λ/2)‖w‖² + Σ_m [1 - y_m wᵀx_m + δ‖w‖]_+`
pub fn asvc_objective(data: &Dataset, w: &[f64], delta: f64, lambda: f64) -> f64 {
    0.5 * lambda * dot(w, w)
        + (0..data.len())
            .map(|m| asvc_hinge_raw(w, delta, data.row(m), data.y(m)))
            .sum::<f64>()
}

/// Fraction of samples whose predicted label matches.
pub fn linear_accuracy(model: &LinearModel, data: &Dataset) -> Result<f64> {
    check_linear(data, model.dim())?;
    let hits = (0..data.len())
        .filter(|&m| (dot(&model.w, data.row(m)) >= 0.0) == (data.label(m) == 1))
        .count();
    Ok(hits as f64 / data.len() as f64)
}

/// GURU: SGD on the robust objective from `w = 0`, step `η₀/√t`.
pub fn train_guru(data: &Dataset, sigma: f64, cfg: &TrainConfig) -> Result<TrainReport> {
    check_sigma(sigma)?;
    cfg.validate()?;
    check_linear(data, data.dim())?;
    let d = data.dim();
    let m = data.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut w = vec![0.0; d];
    let mut g = vec![0.0; d];
    let mut stop = StopRule::new(cfg.epsilon, robust_objective(data, &w, sigma));
    let mut converged = false;
    let mut t = 0;
    while t < cfg.max_iters {
        t += 1;
        let i = sample_index(&mut rng, m);
        g.iter_mut().for_each(|v| *v = 0.0);
        add_robust_gradient(&w, sigma, data.row(i), data.y(i), 1.0, &mut g);
        axpy(-cfg.step(t), &g, &mut w);
        if t % cfg.eval_period == 0 && stop.record(t, robust_objective(data, &w, sigma))? {
            converged = true;
            break;
        }
    }
    if stop.trace.last().map(|p| p.0) != Some(t) {
        stop.record(t, robust_objective(data, &w, sigma))?;
    }
    Ok(TrainReport {
        final_model: LinearModel::new(w, sigma)?,
        objective_trace: stop.trace,
        iterations_run: t,
        converged,
    })
}

/// Hinge + L2 baseline. Each update handles the sampled hinge term with a
/// subgradient step and its `λ/M` share of the regularizer implicitly,
/// `w ← (w - η_t ∂hinge) / (1 + η_t λ / M)`, which stays stable for any λ.
///
/// The returned model carries `sigma = 1`; it plays no role for hinge
/// models.
pub fn train_baseline_svm(data: &Dataset, lambda: f64, cfg: &TrainConfig) -> Result<TrainReport> {
    svm_sgd(data, lambda, cfg, None)
}

fn svm_sgd(
    data: &Dataset,
    lambda: f64,
    cfg: &TrainConfig,
    shift: Option<&[f64]>,
) -> Result<TrainReport> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidConfig(format!("lambda must be positive, got {lambda}")));
    }
    cfg.validate()?;
    check_linear(data, data.dim())?;
    let d = data.dim();
    let m = data.len();
    let shifted = |i: usize, buf: &mut Vec<f64>| {
        buf.clear();
        buf.extend_from_slice(data.row(i));
        if let Some(s) = shift {
            axpy(data.y(i), s, buf);
        }
    };
    let objective = |w: &[f64]| {
        let mut buf = Vec::with_capacity(d);
        let mut total = 0.5 * lambda * dot(w, w);
        for i in 0..m {
            shifted(i, &mut buf);
            total += hinge(w, &buf, data.y(i));
        }
        total
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut w = vec![0.0; d];
    let mut x = Vec::with_capacity(d);
    let mut stop = StopRule::new(cfg.epsilon, objective(&w));
    let mut converged = false;
    let mut t = 0;
    while t < cfg.max_iters {
        t += 1;
        let i = sample_index(&mut rng, m);
        shifted(i, &mut x);
        let y = data.y(i);
        let eta = cfg.step(t);
        if 1.0 - y * dot(&w, &x) > 0.0 {
            axpy(eta * y, &x, &mut w);
        }
        scale(1.0 / (1.0 + eta * lambda / m as f64), &mut w);
        if t % cfg.eval_period == 0 && stop.record(t, objective(&w))? {
            converged = true;
            break;
        }
    }
    if stop.trace.last().map(|p| p.0) != Some(t) {
        stop.record(t, objective(&w))?;
    }
    Ok(TrainReport {
        final_model: LinearModel::new(w, 1.0)?,
        objective_trace: stop.trace,
        iterations_run: t,
        converged,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsvcReport {
    /// Best round by the ASVC objective.
    pub model: LinearModel,
    pub best_round: usize,
    /// ASVC objective after each round.
    pub round_objectives: Vec<f64>,
    pub rounds_run: usize,
    pub converged: bool,
}

/// ASVC: alternate between displacing every point to its worst case
/// `x + y·Δx`, `Δx = -δ w/‖w‖`, and re-solving the SVM on the displaced
/// points. The first round is a plain SVM because the displacement is
/// undefined at `w = 0`.
pub fn train_asvc(
    data: &Dataset,
    delta: f64,
    lambda: f64,
    rounds: usize,
    cfg: &TrainConfig,
) -> Result<AsvcReport> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidConfig(format!("delta must be nonnegative, got {delta}")));
    }
    if rounds == 0 {
        return Err(Error::InvalidConfig("rounds must be at least 1".into()));
    }
    let mut w = svm_sgd(data, lambda, cfg, None)?.final_model.w;
    let mut objectives = vec![asvc_objective(data, &w, delta, lambda)];
    let mut best = (0, w.clone());
    let mut converged = false;
    while objectives.len() < rounds {
        if delta == 0.0 || norm(&w) == 0.0 {
            // no displacement: another round would reproduce this one
            converged = true;
            break;
        }
        let shift = asvc_displacement(&w, delta)?;
        let next = svm_sgd(data, lambda, cfg, Some(&shift))?.final_model.w;
        let obj = asvc_objective(data, &next, delta, lambda);
        let moved = norm(&crate::linalg::sub(&next, &w));
        let settled = moved <= 1e-6 * (1.0 + norm(&w));
        if obj < objectives[best.0] {
            best = (objectives.len(), next.clone());
        }
        objectives.push(obj);
        w = next;
        if settled {
            converged = true;
            break;
        }
    }
    Ok(AsvcReport {
        model: LinearModel::new(best.1, 1.0)?,
        best_round: best.0 + 1,
        rounds_run: objectives.len(),
        round_objectives: objectives,
        converged,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineReport {
    pub model: LinearModel,
    pub iterations: usize,
    pub grad_norm: f64,
    /// Gradient norm reached `grad_tol`; false means `max_iters` ran out.
    pub converged: bool,
    /// `(iteration, objective, gradient norm)`, starting with the input.
    pub trace: Vec<(usize, f64, f64)>,
    /// Steps accepted for reducing the gradient norm while the objective
    /// change was below rounding resolution.
    pub flat_steps: usize,
}

/// Hessian of the robust objective at `w ≠ 0`.
fn robust_hessian(data: &Dataset, w: &[f64], sigma: f64) -> DMatrix<f64> {
    let d = w.len();
    let wn = norm(w);
    let r = sigma * wn;
    let what = DVector::from_iterator(d, w.iter().map(|v| v / wn));
    let mut h = DMatrix::<f64>::zeros(d, d);
    let mut curvature = 0.0;
    let mut v = DVector::<f64>::zeros(d);
    for m in 0..data.len() {
        let x = data.row(m);
        let y = data.y(m);
        let z = (1.0 - y * dot(w, x)) / r;
        let p = gauss_pdf(z);
        if p == 0.0 {
            continue;
        }
        // z∇r - ∇u with ∇r = σŵ and ∇u = -y·x
        for j in 0..d {
            v[j] = z * sigma * what[j] + y * x[j];
        }
        h.syger(p / r, &v, &v, 1.0);
        curvature += p;
    }
    let c = curvature * sigma / wn;
    for j in 0..d {
        h[(j, j)] += c;
    }
    h.syger(-c, &what, &what, 1.0);
    h.fill_upper_triangle_with_lower_triangle();
    h
}

/// Drive a linear model to a stationary point of the robust objective
/// with damped Newton steps and Armijo backtracking.
pub fn batch_refine(
    data: &Dataset,
    sigma: f64,
    model: &LinearModel,
    grad_tol: f64,
    max_iters: usize,
) -> Result<RefineReport> {
    batch_refine_with(data, sigma, model, grad_tol, max_iters, |_, _| {})
}

/// As [`batch_refine`], calling `observe(iteration, w)` on every iterate
/// including the starting point.
pub fn batch_refine_with(
    data: &Dataset,
    sigma: f64,
    model: &LinearModel,
    grad_tol: f64,
    max_iters: usize,
    mut observe: impl FnMut(usize, &[f64]),
) -> Result<RefineReport> {
    check_sigma(sigma)?;
    check_linear(data, model.dim())?;
    if !(grad_tol > 0.0) {
        return Err(Error::InvalidConfig(format!("grad_tol must be positive, got {grad_tol}")));
    }
    if model.norm() == 0.0 {
        return Err(Error::domain("batch refinement needs a nonzero starting model"));
    }
    let d = model.dim();
    let mut w = model.w.clone();
    let mut f = robust_objective(data, &w, sigma);
    let mut g = robust_objective_gradient(data, &w, sigma);
    let mut gn = norm(&g);
    let finite = |f: f64, it: usize| {
        if f.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(format!("objective at refinement step {it}")))
        }
    };
    finite(f, 0)?;
    observe(0, &w);
    let mut trace = vec![(0, f, gn)];
    let mut flat_steps = 0;
    let mut it = 0;
    while gn > grad_tol && it < max_iters {
        it += 1;
        let dir = newton_direction(data, &w, sigma, &g).unwrap_or_else(|| g.iter().map(|v| -v).collect());
        let slope = dot(&g, &dir);
        let (dir, slope) = if slope < 0.0 {
            (dir, slope)
        } else {
            (g.iter().map(|v| -v).collect(), -gn * gn)
        };
        let mut step = 1.0;
        let mut accepted = None;
        let mut best_flat: Option<(Vec<f64>, f64, Vec<f64>, f64)> = None;
        for _ in 0..60 {
            let mut cand = w.clone();
            axpy(step, &dir, &mut cand);
            if norm(&cand) > 0.0 {
                let fc = robust_objective(data, &cand, sigma);
                if fc.is_finite() {
                    if fc < f && fc <= f + 1e-4 * step * slope {
                        accepted = Some((cand, fc));
                        break;
                    }
                    // below rounding resolution the objective cannot confirm
                    // progress; fall back to the gradient norm
                    if (fc - f).abs() <= 64.0 * f64::EPSILON * f.abs().max(1.0) && best_flat.is_none() {
                        let gc = robust_objective_gradient(data, &cand, sigma);
                        let gcn = norm(&gc);
                        if gcn < gn {
                            best_flat = Some((cand, fc, gc, gcn));
                        }
                    }
                }
            }
            step *= 0.5;
        }
        match (accepted, best_flat) {
            (Some((cand, fc)), _) => {
                w = cand;
                f = fc;
                g = robust_objective_gradient(data, &w, sigma);
                gn = norm(&g);
            }
            (None, Some((cand, fc, gc, gcn))) => {
                w = cand;
                f = fc;
                g = gc;
                gn = gcn;
                flat_steps += 1;
            }
            (None, None) => break,
        }
        finite(f, it)?;
        observe(it, &w);
        trace.push((it, f, gn));
    }
    debug_assert_eq!(w.len(), d);
    Ok(RefineReport {
        model: LinearModel::new(w, sigma)?,
        iterations: it,
        grad_norm: gn,
        converged: gn <= grad_tol,
        trace,
        flat_steps,
    })
}

fn newton_direction(data: &Dataset, w: &[f64], sigma: f64, g: &[f64]) -> Option<Vec<f64>> {
    let d = w.len();
    let mut h = robust_hessian(data, w, sigma);
    let rhs = DVector::from_iterator(d, g.iter().map(|v| -v));
    let diag_scale = (0..d).map(|j| h[(j, j)].abs()).fold(0.0, f64::max).max(1e-300);
    let mut shift = 0.0;
    for _ in 0..8 {
        if let Some(chol) = h.clone().cholesky() {
            let sol = chol.solve(&rhs);
            if sol.iter().all(|v| v.is_finite()) {
                return Some(sol.iter().copied().collect());
            }
        }
        let add = if shift == 0.0 { 1e-12 * diag_scale } else { shift * 9.0 };
        for j in 0..d {
            h[(j, j)] += add;
        }
        shift += add;
    }
    None
}

/// Gradient norm of the robust objective.
pub fn robust_gradient_norm(data: &Dataset, w: &[f64], sigma: f64) -> f64 {
    norm(&robust_objective_gradient(data, w, sigma))
}

/// Scalar pieces reused by the kernel trainer's closed-form step.
#[inline]
pub(crate) fn guru_step_coefficients(margin: f64, y: f64, nu: f64, sigma: f64, eta: f64) -> (f64, f64) {
    let u = 1.0 - y * margin;
    let r = sigma * nu;
    if r > 0.0 && (u / r).is_finite() {
        let z = u / r;
        (1.0 - eta * sigma * gauss_pdf(z) / nu, eta * gauss_cdf(z))
    } else {
        let h = if u > 0.0 {
            1.0
        } else if u < 0.0 {
            0.0
        } else {
            0.5
        };
        (1.0, eta * h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_gaussian_toy, Task, ToyKind};

    fn toy() -> (Dataset, Dataset) {
        let (tr, _, te) = gen_gaussian_toy(ToyKind::TwoGauss, 200, 11).unwrap();
        (tr, te)
    }

    #[test]
    fn config_validation() {
        let bad = [
            TrainConfig { eta0: 0.0, ..Default::default() },
            TrainConfig { epsilon: -1.0, ..Default::default() },
            TrainConfig { max_iters: 0, ..Default::default() },
            TrainConfig { eval_period: 0, ..Default::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err());
        }
        let c = TrainConfig::default();
        assert_eq!(c.step(4), c.eta0 / 2.0);
    }

    #[test]
    fn guru_rejects_bad_input() {
        let (tr, _) = toy();
        assert!(train_guru(&tr, 0.0, &TrainConfig::default()).is_err());
        let multi = Dataset::new("m", vec![vec![0.0]; 2], vec![1, 2], Task::Multiclass { classes: 2 }).unwrap();
        assert!(train_guru(&multi, 1.0, &TrainConfig::default()).is_err());
        let empty = Dataset::from_flat("e", 2, vec![], vec![], Task::Binary).unwrap();
        assert!(train_guru(&empty, 1.0, &TrainConfig::default()).is_err());
    }

    #[test]
    fn guru_learns_toy_and_is_deterministic() {
        let (tr, te) = toy();
        let cfg = TrainConfig { seed: 5, ..Default::default() };
        let a = train_guru(&tr, 0.5, &cfg).unwrap();
        let b = train_guru(&tr, 0.5, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.objective_trace[0].1 == tr.len() as f64);
        assert!(a.objective_trace.last().unwrap().1 <= tr.len() as f64);
        assert!(linear_accuracy(&a.final_model, &te).unwrap() >= 0.88);
    }

    #[test]
    fn svm_large_lambda_shrinks() {
        let (tr, _) = toy();
        let r = train_baseline_svm(&tr, 1e6, &TrainConfig::default()).unwrap();
        assert!(r.final_model.norm() <= 1e-2);
    }

    #[test]
    fn asvc_zero_delta_is_svm() {
        let (tr, _) = toy();
        let cfg = TrainConfig { max_iters: 4000, ..Default::default() };
        let svm = train_baseline_svm(&tr, 1.0, &cfg).unwrap();
        let asvc = train_asvc(&tr, 0.0, 1.0, 5, &cfg).unwrap();
        assert_eq!(asvc.model.w, svm.final_model.w);
        assert!(asvc.converged);
    }

    #[test]
    fn hessian_matches_finite_differences() {
        let (tr, _) = toy();
        let w = [0.7, -0.3];
        let h = robust_hessian(&tr, &w, 0.8);
        let eps = 1e-6;
        for j in 0..2 {
            let mut wp = w;
            let mut wm = w;
            wp[j] += eps;
            wm[j] -= eps;
            let gp = robust_objective_gradient(&tr, &wp, 0.8);
            let gm = robust_objective_gradient(&tr, &wm, 0.8);
            for i in 0..2 {
                let fd = (gp[i] - gm[i]) / (2.0 * eps);
                assert!((fd - h[(i, j)]).abs() <= 1e-5 * (1.0 + fd.abs()), "{fd} vs {}", h[(i, j)]);
            }
        }
    }

    #[test]
    fn refine_reaches_stationarity() {
        let (tr, _) = toy();
        let start = train_guru(&tr, 0.5, &TrainConfig { max_iters: 2000, ..Default::default() }).unwrap();
        let f0 = robust_objective(&tr, &start.final_model.w, 0.5);
        let r = batch_refine(&tr, 0.5, &start.final_model, 1e-8, 100).unwrap();
        assert!(r.converged, "{}", r.grad_norm);
        assert!(robust_objective(&tr, &r.model.w, 0.5) <= f0);
        let again = batch_refine(&tr, 0.5, &r.model, 1e-8, 100).unwrap();
        assert!(again.iterations <= 1);
    }

    #[test]
    fn step_coefficients_limit() {
        assert_eq!(guru_step_coefficients(0.0, 1.0, 0.0, 1.0, 0.3), (1.0, 0.3));
        let (g, m) = guru_step_coefficients(1e6, 1.0, 1.0, 0.1, 0.3);
        assert_eq!((g, m), (1.0, 0.0));
    }
}
