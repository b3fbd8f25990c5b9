//! Vector-level losses: the Gaussian-robust hinge and its gradient, the
//! adversary's covariance choice under three constraint families, the
//! single-point (ASVC) worst-case displacement, and the multiclass
//! sum-of-hinges robust loss.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm, sub};
use crate::math::{gauss_cdf, gauss_pdf, ScalarLoss};

/// Binary linear classifier `sign(wᵀx)` together with its noise scale σ
/// (the adversary's variance budget is β = σ²).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub w: Vec<f64>,
    pub sigma: f64,
}

impl LinearModel {
    pub fn new(w: Vec<f64>, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("weight vector".into()));
        }
        Ok(Self { w, sigma })
    }

    pub fn zeros(dim: usize, sigma: f64) -> Result<Self> {
        Self::new(vec![0.0; dim], sigma)
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.w)
    }

    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        Error::check_dim(self.dim(), x.len())?;
        Ok(dot(&self.w, x))
    }

    /// Predicted label in {-1, +1}; ties go to +1.
    pub fn predict(&self, x: &[f64]) -> Result<i32> {
        Ok(if self.decision(x)? >= 0.0 { 1 } else { -1 })
    }
}

/// `[1 - y wᵀx]_+`
pub fn hinge(w: &[f64], x: &[f64], y: f64) -> f64 {
    (1.0 - y * dot(w, x)).max(0.0)
}

/// `scale · f(u / scale)`, falling back to the removable limit `[u]_+` when
/// the scale vanishes or the ratio is not representable.
#[inline]
pub(crate) fn erf_perspective_or_limit(scale: f64, u: f64) -> f64 {
    if scale > 0.0 && (u / scale).is_finite() {
        scale * ScalarLoss::Erf.value(u / scale)
    } else {
        u.max(0.0)
    }
}

/// Robust hinge for a raw weight slice; no dimension checks.
#[inline]
pub(crate) fn robust_hinge_raw(w: &[f64], sigma: f64, x: &[f64], y: f64) -> f64 {
    let u = 1.0 - y * dot(w, x);
    erf_perspective_or_limit(sigma * norm(w), u)
}

/// `out += coef · ∇_w ℓ(x, y; w, σ²)`; no dimension checks.
///
/// At `w = 0` (or when `u / (σ‖w‖)` overflows) the gradient takes its
/// limiting value `-y·x·H(u)`, with `H` the Heaviside step (½ at 0).
pub(crate) fn add_robust_gradient(
    w: &[f64],
    sigma: f64,
    x: &[f64],
    y: f64,
    coef: f64,
    out: &mut [f64],
) {
    let wn = norm(w);
    let u = 1.0 - y * dot(w, x);
    let scale = sigma * wn;
    if scale > 0.0 && (u / scale).is_finite() {
        let z = u / scale;
        axpy(-coef * y * gauss_cdf(z), x, out);
        axpy(coef * sigma * gauss_pdf(z) / wn, w, out);
    } else {
        let step = if u > 0.0 {
            1.0
        } else if u < 0.0 {
            0.0
        } else {
            0.5
        };
        axpy(-coef * y * step, x, out);
    }
}

/// Worst-case expected hinge loss under trace-bounded Gaussian noise:
/// `σ‖w‖ · f((1 - y wᵀx) / (σ‖w‖))`. At `w = 0` this is the limit value 1.
pub fn robust_hinge(model: &LinearModel, x: &[f64], y: f64) -> Result<f64> {
    Error::check_dim(model.dim(), x.len())?;
    Ok(robust_hinge_raw(&model.w, model.sigma, x, y))
}

pub fn robust_hinge_gradient(model: &LinearModel, x: &[f64], y: f64) -> Result<Vec<f64>> {
    Error::check_dim(model.dim(), x.len())?;
    let mut g = vec![0.0; model.dim()];
    add_robust_gradient(&model.w, model.sigma, x, y, 1.0, &mut g);
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CovarianceConstraint {
    /// PSD with `trace(Σ) <= β`.
    TraceBound,
    /// PSD with largest eigenvalue `<= β`.
    SpectralBound,
    /// Diagonal PSD with `trace(Σ) <= β`.
    DiagonalTraceBound,
}

/// Factored representation of a covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceFactor {
    /// `β · u uᵀ` with `‖u‖ = 1`.
    RankOne(Vec<f64>),
    /// `β · I_d`.
    Isotropic(usize),
    /// `β · e_i e_iᵀ` in dimension `dim`.
    Axis { dim: usize, index: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceChoice {
    pub constraint: CovarianceConstraint,
    pub budget: f64,
    pub factor: CovarianceFactor,
}

impl CovarianceChoice {
    /// Rank-one choice `β·uuᵀ` along an arbitrary (normalized) direction.
    pub fn rank_one(budget: f64, direction: &[f64]) -> Result<Self> {
        let n = norm(direction);
        if !(n > 0.0) {
            return Err(Error::domain("rank-one direction must be nonzero"));
        }
        Ok(Self {
            constraint: CovarianceConstraint::TraceBound,
            budget,
            factor: CovarianceFactor::RankOne(direction.iter().map(|v| v / n).collect()),
        })
    }

    pub fn dim(&self) -> usize {
        match &self.factor {
            CovarianceFactor::RankOne(u) => u.len(),
            CovarianceFactor::Isotropic(d) => *d,
            CovarianceFactor::Axis { dim, .. } => *dim,
        }
    }

    /// `wᵀ Σ w`
    pub fn quad_form(&self, w: &[f64]) -> f64 {
        match &self.factor {
            CovarianceFactor::RankOne(u) => {
                let p = dot(u, w);
                self.budget * p * p
            }
            CovarianceFactor::Isotropic(_) => self.budget * dot(w, w),
            CovarianceFactor::Axis { index, .. } => self.budget * w[*index] * w[*index],
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        let mut m = vec![vec![0.0; d]; d];
        match &self.factor {
            CovarianceFactor::RankOne(u) => {
                for i in 0..d {
                    for j in 0..d {
                        m[i][j] = self.budget * u[i] * u[j];
                    }
                }
            }
            CovarianceFactor::Isotropic(_) => {
                for (i, row) in m.iter_mut().enumerate() {
                    row[i] = self.budget;
                }
            }
            CovarianceFactor::Axis { index, .. } => m[*index][*index] = self.budget,
        }
        m
    }
}

/// The adversary's covariance: the matrix in the constraint set that
/// maximizes `wᵀΣw` (and with it the expected hinge loss).
///
/// Trace bound gives `β wwᵀ/‖w‖²`, spectral bound `βI`, and the diagonal
/// trace bound puts the whole budget on `argmax_i w_i²` (lowest index on
/// ties).
pub fn adversarial_covariance(
    constraint: CovarianceConstraint,
    budget: f64,
    w: &[f64],
) -> Result<CovarianceChoice> {
    if !(budget > 0.0 && budget.is_finite()) {
        return Err(Error::domain(format!("budget must be positive, got {budget}")));
    }
    let factor = match constraint {
        CovarianceConstraint::TraceBound => {
            let n = norm(w);
            if !(n > 0.0) {
                return Err(Error::domain("trace-bound adversary undefined at w = 0"));
            }
            CovarianceFactor::RankOne(w.iter().map(|v| v / n).collect())
        }
        CovarianceConstraint::SpectralBound => CovarianceFactor::Isotropic(w.len()),
        CovarianceConstraint::DiagonalTraceBound => {
            let mut best: Option<(usize, f64)> = None;
            for (i, v) in w.iter().enumerate() {
                let s = v * v;
                if best.is_none_or(|(_, b)| s > b) {
                    best = Some((i, s));
                }
            }
            match best {
                Some((index, s)) if s > 0.0 => CovarianceFactor::Axis { dim: w.len(), index },
                _ => return Err(Error::domain("diagonal adversary undefined at w = 0")),
            }
        }
    };
    Ok(CovarianceChoice {
        constraint,
        budget,
        factor,
    })
}

fn random_gaussian_matrix(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Random PSD challenger drawn from inside the constraint set.
fn sample_challenger(
    constraint: CovarianceConstraint,
    budget: f64,
    d: usize,
    rng: &mut ChaCha8Rng,
) -> DMatrix<f64> {
    match constraint {
        CovarianceConstraint::TraceBound => {
            let s = if rng.random_bool(0.5) {
                let v = DMatrix::from_fn(d, 1, |_, _| rng.sample::<f64, _>(StandardNormal));
                &v * v.transpose()
            } else {
                let a = random_gaussian_matrix(rng, d);
                &a * a.transpose()
            };
            let tr = s.trace();
            s * (budget / tr)
        }
        CovarianceConstraint::SpectralBound => {
            let q = random_gaussian_matrix(rng, d).qr().q();
            let eig = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(d, |_, _| {
                budget * rng.random::<f64>()
            }));
            &q * eig * q.transpose()
        }
        CovarianceConstraint::DiagonalTraceBound => {
            let raw: Vec<f64> = (0..d)
                .map(|_| -rng.random::<f64>().max(f64::MIN_POSITIVE).ln())
                .collect();
            let total: f64 = raw.iter().sum();
            DMatrix::from_diagonal(&nalgebra::DVector::from_fn(d, |i, _| {
                budget * raw[i] / total
            }))
        }
    }
}

/// Randomized check of an adversarial choice: true iff `wᵀΣ*w` is at least
/// `wᵀΣw - 1e-10` for every one of `trials` random PSD challengers drawn
/// from the same constraint set.
pub fn adversarial_covariance_is_optimal(
    choice: &CovarianceChoice,
    w: &[f64],
    trials: usize,
    seed: u64,
) -> bool {
    let d = choice.dim();
    if w.len() != d {
        return false;
    }
    let best = choice.quad_form(w);
    let wv = nalgebra::DVector::from_column_slice(w);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials).all(|_| {
        let s = sample_challenger(choice.constraint, choice.budget, d, &mut rng);
        let val = (wv.transpose() * &s * &wv)[(0, 0)];
        best >= val - 1e-10
    })
}

/// Worst-case displacement inside a ball of radius `delta`: `-δ·w/‖w‖`.
/// A sample with label `y` is moved to `x + y·Δx`.
pub fn asvc_displacement(w: &[f64], delta: f64) -> Result<Vec<f64>> {
    if !(delta > 0.0) {
        return Err(Error::domain(format!("delta must be positive, got {delta}")));
    }
    let n = norm(w);
    if !(n > 0.0) {
        return Err(Error::domain("displacement undefined at w = 0"));
    }
    Ok(w.iter().map(|v| -delta * v / n).collect())
}

#[inline]
pub(crate) fn asvc_hinge_raw(w: &[f64], delta: f64, x: &[f64], y: f64) -> f64 {
    (1.0 - y * dot(w, x) + delta * norm(w)).max(0.0)
}

/// Worst-case hinge over the δ-ball, `[1 - y wᵀx + δ‖w‖]_+`.
pub fn asvc_robust_hinge(w: &[f64], delta: f64, x: &[f64], y: f64) -> Result<f64> {
    Error::check_dim(w.len(), x.len())?;
    if !(delta >= 0.0) {
        return Err(Error::domain(format!("delta must be nonnegative, got {delta}")));
    }
    if !(norm(w) > 0.0) {
        return Err(Error::domain("worst-case displacement undefined at w = 0"));
    }
    Ok(asvc_hinge_raw(w, delta, x, y))
}

/// One weight vector per class; prediction is `argmax_y w_yᵀx`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulticlassModel {
    pub weights: Vec<Vec<f64>>,
    pub sigma: f64,
}

impl MulticlassModel {
    pub fn new(weights: Vec<Vec<f64>>, sigma: f64) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::domain(format!(
                "multiclass model needs at least 2 classes, got {}",
                weights.len()
            )));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
        }
        let d = weights[0].len();
        for w in &weights {
            Error::check_dim(d, w.len())?;
            if w.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("class weight vector".into()));
            }
        }
        Ok(Self { weights, sigma })
    }

    pub fn zeros(classes: usize, dim: usize, sigma: f64) -> Result<Self> {
        Self::new(vec![vec![0.0; dim]; classes], sigma)
    }

    pub fn classes(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.weights[0].len()
    }

    pub(crate) fn check(&self, x: &[f64], class: usize) -> Result<()> {
        Error::check_dim(self.dim(), x.len())?;
        if class >= self.classes() {
            return Err(Error::domain(format!(
                "class index {class} out of range for {} classes",
                self.classes()
            )));
        }
        Ok(())
    }
}

/// Raw sum-of-hinges robust loss; `y` is a 0-based class index.
pub(crate) fn multiclass_sum_loss_raw(model: &MulticlassModel, x: &[f64], y: usize) -> f64 {
    let wy = &model.weights[y];
    model
        .weights
        .iter()
        .enumerate()
        .filter(|(r, _)| *r != y)
        .map(|(_, wr)| robust_hinge_raw(&sub(wy, wr), model.sigma, x, 1.0))
        .sum()
}

/// Robust sum-of-hinges loss under the isotropic (spectral-bound)
/// adversary: `Σ_{y' ≠ y} ℓ(x, +1; w_y - w_{y'}, σ²)`.
///
/// Class indices are 0-based.
pub fn multiclass_sum_loss(model: &MulticlassModel, x: &[f64], y: usize) -> Result<f64> {
    model.check(x, y)?;
    Ok(multiclass_sum_loss_raw(model, x, y))
}

/// Gradients of the sum loss with respect to every class vector at once.
pub(crate) fn multiclass_sum_gradients_raw(
    model: &MulticlassModel,
    x: &[f64],
    y: usize,
) -> Vec<Vec<f64>> {
    let d = model.dim();
    let mut grads = vec![vec![0.0; d]; model.classes()];
    let mut g = vec![0.0; d];
    for r in (0..model.classes()).filter(|&r| r != y) {
        let diff = sub(&model.weights[y], &model.weights[r]);
        g.iter_mut().for_each(|v| *v = 0.0);
        add_robust_gradient(&diff, model.sigma, x, 1.0, 1.0, &mut g);
        axpy(1.0, &g, &mut grads[y]);
        axpy(-1.0, &g, &mut grads[r]);
    }
    grads
}

/// Gradient of the sum loss with respect to `w_r`: the sum of the binary
/// gradients over all competitors when `r = y`, and minus the binary
/// gradient of the `(y, r)` pair otherwise.
pub fn multiclass_sum_gradient(
    model: &MulticlassModel,
    x: &[f64],
    y: usize,
    r: usize,
) -> Result<Vec<f64>> {
    model.check(x, y)?;
    model.check(x, r)?;
    let d = model.dim();
    let mut g = vec![0.0; d];
    if r == y {
        for other in (0..model.classes()).filter(|&o| o != y) {
            let diff = sub(&model.weights[y], &model.weights[other]);
            add_robust_gradient(&diff, model.sigma, x, 1.0, 1.0, &mut g);
        }
    } else {
        let diff = sub(&model.weights[y], &model.weights[r]);
        add_robust_gradient(&diff, model.sigma, x, 1.0, -1.0, &mut g);
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::INV_SQRT_2PI;

    fn model(w: &[f64], sigma: f64) -> LinearModel {
        LinearModel::new(w.to_vec(), sigma).unwrap()
    }

    #[test]
    fn robust_hinge_limits() {
        let m = model(&[1.0, 0.0], 1e-8);
        assert!(robust_hinge(&m, &[2.0, 0.0], 1.0).unwrap().abs() < 1e-7);
        assert!((robust_hinge(&m, &[2.0, 0.0], -1.0).unwrap() - 3.0).abs() < 1e-7);
        let m = model(&[1.0, 0.0], 1.0);
        let v = robust_hinge(&m, &[1.0, 0.0], 1.0).unwrap();
        assert!((v - INV_SQRT_2PI).abs() < 1e-15);
    }

    #[test]
    fn zero_weight_conventions() {
        let m = model(&[0.0, 0.0], 0.7);
        assert_eq!(robust_hinge(&m, &[3.0, -1.0], 1.0).unwrap(), 1.0);
        assert_eq!(robust_hinge_gradient(&m, &[3.0, -1.0], 1.0).unwrap(), vec![-3.0, 1.0]);
        assert_eq!(robust_hinge_gradient(&m, &[3.0, -1.0], -1.0).unwrap(), vec![3.0, -1.0]);
        // subnormal norm takes the same path
        let m = model(&[1e-320, 0.0], 0.7);
        assert_eq!(robust_hinge(&m, &[3.0, -1.0], 1.0).unwrap(), 1.0);
    }

    #[test]
    fn dimension_mismatch() {
        let m = model(&[1.0, 0.0], 1.0);
        assert!(matches!(
            robust_hinge(&m, &[1.0], 1.0),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
        assert!(robust_hinge_gradient(&m, &[1.0, 2.0, 3.0], 1.0).is_err());
    }

    #[test]
    fn hinge_limit_gradient() {
        let m = model(&[1.0, 0.0], 1e-8);
        let g = robust_hinge_gradient(&m, &[2.0, 0.0], -1.0).unwrap();
        assert!((g[0] - 2.0).abs() < 1e-9 && g[1].abs() < 1e-12);
    }

    #[test]
    fn covariance_examples() {
        let c = adversarial_covariance(CovarianceConstraint::TraceBound, 2.0, &[1.0, 0.0]).unwrap();
        assert_eq!(c.to_dense(), vec![vec![2.0, 0.0], vec![0.0, 0.0]]);
        let c = adversarial_covariance(CovarianceConstraint::SpectralBound, 3.0, &[0.3, 0.1]).unwrap();
        assert_eq!(c.to_dense(), vec![vec![3.0, 0.0], vec![0.0, 3.0]]);
        let c = adversarial_covariance(CovarianceConstraint::DiagonalTraceBound, 1.0, &[1.0, -3.0, 2.0])
            .unwrap();
        assert_eq!(c.factor, CovarianceFactor::Axis { dim: 3, index: 1 });
        let dense = c.to_dense();
        assert_eq!(dense[1][1], 1.0);
        assert_eq!(dense.iter().flatten().filter(|v| **v != 0.0).count(), 1);
        // ties resolve to the lowest index
        let c = adversarial_covariance(CovarianceConstraint::DiagonalTraceBound, 1.0, &[2.0, -2.0])
            .unwrap();
        assert_eq!(c.factor, CovarianceFactor::Axis { dim: 2, index: 0 });
    }

    #[test]
    fn covariance_zero_weight() {
        assert!(adversarial_covariance(CovarianceConstraint::TraceBound, 1.0, &[0.0, 0.0]).is_err());
        assert!(
            adversarial_covariance(CovarianceConstraint::DiagonalTraceBound, 1.0, &[0.0, 0.0]).is_err()
        );
        assert!(adversarial_covariance(CovarianceConstraint::SpectralBound, 1.0, &[0.0, 0.0]).is_ok());
        assert!(adversarial_covariance(CovarianceConstraint::SpectralBound, 0.0, &[1.0]).is_err());
    }

    #[test]
    fn optimality_check_has_power() {
        let w = [1.0, 0.0];
        let c = adversarial_covariance(CovarianceConstraint::TraceBound, 1.0, &w).unwrap();
        assert!(adversarial_covariance_is_optimal(&c, &w, 1000, 1));
        let a = 30f64.to_radians();
        let rotated = CovarianceChoice::rank_one(1.0, &[a.cos(), a.sin()]).unwrap();
        assert!(!adversarial_covariance_is_optimal(&rotated, &w, 1000, 1));
        let c = adversarial_covariance(CovarianceConstraint::TraceBound, 1.0, &[-2.0]).unwrap();
        assert!(adversarial_covariance_is_optimal(&c, &[-2.0], 100, 3));
    }

    #[test]
    fn asvc_examples() {
        let d = asvc_displacement(&[3.0, 4.0], 1.0).unwrap();
        assert!((d[0] + 0.6).abs() < 1e-15 && (d[1] + 0.8).abs() < 1e-15);
        let v = asvc_robust_hinge(&[3.0, 4.0], 0.5, &[1.0, 0.0], 1.0).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        assert_eq!(
            asvc_robust_hinge(&[3.0, 4.0], 0.0, &[0.1, 0.0], 1.0).unwrap(),
            hinge(&[3.0, 4.0], &[0.1, 0.0], 1.0)
        );
        assert!(asvc_displacement(&[0.0, 0.0], 1.0).is_err());
        assert!(asvc_displacement(&[1.0, 0.0], 0.0).is_err());
        assert!(asvc_robust_hinge(&[0.0, 0.0], 1.0, &[1.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn multiclass_examples() {
        let m = MulticlassModel::new(vec![vec![1.0, 0.0], vec![-1.0, 0.0]], 1.0).unwrap();
        let b = model(&[2.0, 0.0], 1.0);
        assert_eq!(
            multiclass_sum_loss(&m, &[1.0, 0.0], 0).unwrap(),
            robust_hinge(&b, &[1.0, 0.0], 1.0).unwrap()
        );
        let m = MulticlassModel::zeros(4, 3, 0.5).unwrap();
        assert_eq!(multiclass_sum_loss(&m, &[1.0, 2.0, 3.0], 2).unwrap(), 3.0);
        assert!(multiclass_sum_loss(&m, &[1.0, 2.0, 3.0], 4).is_err());
        assert!(multiclass_sum_gradient(&m, &[1.0, 2.0, 3.0], 0, 7).is_err());
        assert!(MulticlassModel::zeros(1, 3, 0.5).is_err());
    }

    #[test]
    fn multiclass_gradient_matches_batched() {
        let m = MulticlassModel::new(
            vec![vec![0.3, -0.2], vec![-0.1, 0.5], vec![0.7, 0.1]],
            0.8,
        )
        .unwrap();
        let x = [0.4, -1.1];
        let all = multiclass_sum_gradients_raw(&m, &x, 1);
        for (r, g) in all.iter().enumerate() {
            let single = multiclass_sum_gradient(&m, &x, 1, r).unwrap();
            for (a, b) in g.iter().zip(&single) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }
}
