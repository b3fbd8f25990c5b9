//! KEN-GURU: kernelized GURU over the representer expansion
//! `w = Σ_m α_m y_m φ(x_m)`, with an O(1) running value of `‖w‖`.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::linear::{check_sigma, guru_step_coefficients, sample_index, StopRule, TrainConfig};
use crate::robust::erf_perspective_or_limit;

/// Mercer kernels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    Linear,
    /// `(offset + xᵀz)^degree`
    Polynomial { degree: u32, offset: f64 },
    /// `exp(-γ‖x - z‖²)`
    Rbf { gamma: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Polynomial { degree, offset } => {
                if degree == 0 || !(offset >= 0.0 && offset.is_finite()) {
                    Err(Error::InvalidConfig(format!(
                        "polynomial kernel needs degree >= 1 and offset >= 0, got {degree}, {offset}"
                    )))
                } else {
                    Ok(())
                }
            }
            KernelSpec::Rbf { gamma } => {
                if gamma > 0.0 && gamma.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidConfig(format!("rbf gamma must be positive, got {gamma}")))
                }
            }
        }
    }

    #[inline]
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => dot(a, b),
            KernelSpec::Polynomial { degree, offset } => (offset + dot(a, b)).powi(degree as i32),
            KernelSpec::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Linear => write!(f, "linear"),
            KernelSpec::Polynomial { degree, offset } => write!(f, "poly:{degree}:{offset}"),
            KernelSpec::Rbf { gamma } => write!(f, "rbf:{gamma}"),
        }
    }
}

/// Parses `linear`, `poly:<degree>[:<offset>]` (offset defaults to 1) and
/// `rbf:<gamma>`.
impl FromStr for KernelSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| t.parse::<f64>().map_err(|_| format!("invalid number `{t}` in kernel `{s}`"));
        let spec = match parts.as_slice() {
            ["linear"] => KernelSpec::Linear,
            ["poly", deg] | ["poly", deg, _] => KernelSpec::Polynomial {
                degree: deg.parse().map_err(|_| format!("invalid degree `{deg}` in kernel `{s}`"))?,
                offset: if parts.len() == 3 { num(parts[2])? } else { 1.0 },
            },
            ["rbf", g] => KernelSpec::Rbf { gamma: num(g)? },
            _ => return Err(format!("unknown kernel `{s}` (expected linear, poly:D[:C] or rbf:G)")),
        };
        spec.validate().map_err(|e| e.to_string())?;
        Ok(spec)
    }
}

/// Training sets up to this size get a fully precomputed Gram matrix.
pub const FULL_GRAM_LIMIT: usize = 8192;
/// Rows kept by the LRU cache used above [`FULL_GRAM_LIMIT`].
pub const DEFAULT_CACHE_ROWS: usize = 1024;

#[derive(Debug)]
enum GramStore {
    Full(Vec<f64>),
    Rows(Mutex<RowCache>),
}

#[derive(Debug)]
struct RowCache {
    capacity: usize,
    rows: HashMap<usize, Arc<Vec<f64>>>,
    order: VecDeque<usize>,
}

/// Gram matrix `K_mn = κ(x_m, x_n)` of a training set, either fully
/// materialized or computed row by row behind an LRU cache.
#[derive(Debug)]
pub struct Gram {
    kernel: KernelSpec,
    data: Arc<Dataset>,
    diag: Vec<f64>,
    store: GramStore,
}

impl Gram {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn is_full(&self) -> bool {
        matches!(self.store, GramStore::Full(_))
    }

    #[inline]
    pub fn diag(&self, i: usize) -> f64 {
        self.diag[i]
    }

    fn compute_row(&self, i: usize) -> Vec<f64> {
        let xi = self.data.row(i);
        (0..self.len()).map(|n| self.kernel.eval(xi, self.data.row(n))).collect()
    }

    /// Row `i`, borrowed from the full matrix or from the cache.
    pub fn row(&self, i: usize) -> Arc<Vec<f64>> {
        match &self.store {
            GramStore::Full(k) => Arc::new(k[i * self.len()..(i + 1) * self.len()].to_vec()),
            GramStore::Rows(cache) => self.cached_row(cache, i),
        }
    }

    fn cached_row(&self, cache: &Mutex<RowCache>, i: usize) -> Arc<Vec<f64>> {
        let mut c = cache.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(r) = c.rows.get(&i).cloned() {
            if let Some(pos) = c.order.iter().position(|&k| k == i) {
                c.order.remove(pos);
            }
            c.order.push_back(i);
            return r;
        }
        let r = Arc::new(self.compute_row(i));
        if c.rows.len() >= c.capacity {
            if let Some(old) = c.order.pop_front() {
                c.rows.remove(&old);
            }
        }
        c.rows.insert(i, r.clone());
        c.order.push_back(i);
        r
    }

    /// Run `f` on row `i` without copying when the matrix is materialized.
    #[inline]
    pub fn with_row<T>(&self, i: usize, f: impl FnOnce(&[f64]) -> T) -> T {
        match &self.store {
            GramStore::Full(k) => f(&k[i * self.len()..(i + 1) * self.len()]),
            GramStore::Rows(cache) => f(&self.cached_row(cache, i)),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match &self.store {
            GramStore::Full(k) => k[i * self.len() + j],
            GramStore::Rows(_) => self.with_row(i, |r| r[j]),
        }
    }
}

/// Gram matrix with the default storage policy.
pub fn gram_matrix(data: &Dataset, kernel: KernelSpec) -> Result<Gram> {
    build_gram(Arc::new(data.clone()), kernel, FULL_GRAM_LIMIT, DEFAULT_CACHE_ROWS)
}

/// Gram matrix with explicit storage policy: materialized when
/// `len <= full_limit`, otherwise an LRU cache of `cache_rows` rows.
pub fn gram_matrix_with(
    data: &Dataset,
    kernel: KernelSpec,
    full_limit: usize,
    cache_rows: usize,
) -> Result<Gram> {
    build_gram(Arc::new(data.clone()), kernel, full_limit, cache_rows)
}

fn build_gram(data: Arc<Dataset>, kernel: KernelSpec, full_limit: usize, cache_rows: usize) -> Result<Gram> {
    kernel.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidData("no samples".into()));
    }
    if data.features().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("feature value".into()));
    }
    let m = data.len();
    let diag: Vec<f64> = (0..m).map(|i| kernel.eval(data.row(i), data.row(i))).collect();
    let store = if m <= full_limit {
        let mut k = vec![0.0; m * m];
        for i in 0..m {
            k[i * m + i] = diag[i];
            for j in 0..i {
                let v = kernel.eval(data.row(i), data.row(j));
                k[i * m + j] = v;
                k[j * m + i] = v;
            }
        }
        GramStore::Full(k)
    } else {
        GramStore::Rows(Mutex::new(RowCache {
            capacity: cache_rows.max(1),
            rows: HashMap::new(),
            order: VecDeque::new(),
        }))
    };
    if let Some(i) = diag.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("kernel value at sample {i}")));
    }
    Ok(Gram { kernel, data, diag, store })
}

/// Kernel classifier `x ↦ Σ_m α_m y_m κ(x_m, x)`.
///
/// Coefficients are held as `scale · coef` so the per-step shrink by γ
/// is a single multiplication; the scale is folded back into the
/// coefficients before it can under- or overflow.
#[derive(Debug, Clone)]
pub struct KernelModel {
    kernel: KernelSpec,
    sigma: f64,
    coef: Vec<f64>,
    scale: f64,
    nu: f64,
    gram: Arc<Gram>,
}

/// Quantities computed by one KEN-GURU update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub zeta: f64,
    pub gamma: f64,
    pub mu: f64,
}

const SCALE_LOW: f64 = 1e-150;
const SCALE_HIGH: f64 = 1e150;

impl KernelModel {
    /// All-zero coefficients over `train`.
    pub fn zeros(train: &Dataset, kernel: KernelSpec, sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        train.require_binary()?;
        let gram = Arc::new(gram_matrix(train, kernel)?);
        Ok(Self::with_gram(gram, sigma))
    }

    fn with_gram(gram: Arc<Gram>, sigma: f64) -> Self {
        Self {
            kernel: gram.kernel,
            sigma,
            coef: vec![0.0; gram.len()],
            scale: 1.0,
            nu: 0.0,
            gram,
        }
    }

    /// Model with the given coefficients; `ν` is recomputed from the Gram
    /// matrix.
    pub fn from_parts(train: &Dataset, kernel: KernelSpec, sigma: f64, alphas: Vec<f64>) -> Result<Self> {
        let mut model = Self::zeros(train, kernel, sigma)?;
        Error::check_dim(train.len(), alphas.len())?;
        if alphas.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite("kernel coefficients".into()));
        }
        model.coef = alphas;
        model.nu = recompute_norm(&model);
        Ok(model)
    }

    pub(crate) fn set_nu(&mut self, nu: f64) -> Result<()> {
        if !(nu >= 0.0 && nu.is_finite()) {
            return Err(Error::Format(format!("invalid cached norm {nu}")));
        }
        self.nu = nu;
        Ok(())
    }

    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Cached `‖w‖`.
    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn train(&self) -> &Dataset {
        &self.gram.data
    }

    pub fn gram(&self) -> &Gram {
        &self.gram
    }

    pub fn len(&self) -> usize {
        self.coef.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coef.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.gram.data.dim()
    }

    pub fn alpha(&self, m: usize) -> f64 {
        self.scale * self.coef[m]
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.coef.iter().map(|c| self.scale * c).collect()
    }

    /// `ζ_i = Σ_m α_m y_m K_mi`, i.e. `wᵀφ(x_i)`.
    pub fn train_margin(&self, i: usize) -> f64 {
        let data = &self.gram.data;
        let s = self.gram.with_row(i, |row| {
            self.coef
                .iter()
                .zip(row)
                .enumerate()
                .filter(|(_, (c, _))| **c != 0.0)
                .map(|(m, (c, k))| c * data.y(m) * k)
                .sum::<f64>()
        });
        self.scale * s
    }

    fn renormalize(&mut self) {
        let s = self.scale;
        self.coef.iter_mut().for_each(|c| *c *= s);
        self.scale = 1.0;
    }

    /// Implied primal weight vector; only meaningful for the linear kernel.
    pub fn primal_weights(&self) -> Option<Vec<f64>> {
        if self.kernel != KernelSpec::Linear {
            return None;
        }
        let data = &self.gram.data;
        let mut w = vec![0.0; data.dim()];
        for m in 0..self.len() {
            crate::linalg::axpy(self.alpha(m) * data.y(m), data.row(m), &mut w);
        }
        Some(w)
    }
}

/// One KEN-GURU update on sample `i` (0-based) at update count `t ≥ 1`:
/// `α ← γ α`, `α_i += μ`, and the matching O(1) update of `ν`.
///
/// At `ν = 0` the limit conventions of the primal apply: `γ = 1` and
/// `μ = η₀/√t · H(1 - y_i ζ)`.
pub fn ken_guru_step(model: &mut KernelModel, i: usize, t: usize, eta0: f64) -> Result<StepInfo> {
    if i >= model.len() {
        return Err(Error::InvalidConfig(format!(
            "sample index {i} out of range for {} samples",
            model.len()
        )));
    }
    if t == 0 {
        return Err(Error::InvalidConfig("update count starts at 1".into()));
    }
    let y = model.gram.data.y(i);
    let zeta = model.train_margin(i);
    let eta = eta0 / (t as f64).sqrt();
    let (gamma, mu) = guru_step_coefficients(zeta, y, model.nu, model.sigma, eta);
    let kii = model.gram.diag(i);
    let nu2 = gamma * gamma * model.nu * model.nu + 2.0 * gamma * mu * y * zeta + mu * mu * kii;
    if gamma == 0.0 {
        model.coef.iter_mut().for_each(|c| *c = 0.0);
        model.scale = 1.0;
    } else {
        model.scale *= gamma;
        if !(SCALE_LOW..=SCALE_HIGH).contains(&model.scale.abs()) {
            model.renormalize();
        }
    }
    model.coef[i] += mu / model.scale;
    model.nu = nu2.max(0.0).sqrt();
    if !model.nu.is_finite() {
        return Err(Error::NonFinite(format!("classifier norm at update {t}")));
    }
    Ok(StepInfo { zeta, gamma, mu })
}

/// `‖w‖` from scratch: `sqrt(Σ_{m,n} α_m α_n y_m y_n K_mn)`, O(M²).
pub fn recompute_norm(model: &KernelModel) -> f64 {
    let data = &model.gram.data;
    let a: Vec<f64> = (0..model.len()).map(|m| model.alpha(m) * data.y(m)).collect();
    let mut total = 0.0;
    for (m, am) in a.iter().enumerate() {
        if *am == 0.0 {
            continue;
        }
        total += am * model.gram.with_row(m, |row| dot(&a, row));
    }
    total.max(0.0).sqrt()
}

/// Decision value `Σ_m α_m y_m κ(x_m, x)`; its sign is the label.
///
/// Computed from the materialized `α_m`, so a model rebuilt from its saved
/// coefficients predicts bit-identically.
pub fn kernel_predict(model: &KernelModel, x: &[f64]) -> Result<f64> {
    Error::check_dim(model.dim(), x.len())?;
    let data = &model.gram.data;
    Ok(model
        .coef
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(m, c)| model.scale * c * data.y(m) * model.kernel.eval(data.row(m), x))
        .sum())
}

pub fn kernel_accuracy(model: &KernelModel, data: &Dataset) -> Result<f64> {
    data.require_binary()?;
    Error::check_dim(model.dim(), data.dim())?;
    let mut hits = 0usize;
    for m in 0..data.len() {
        let v = kernel_predict(model, data.row(m))?;
        if (v >= 0.0) == (data.label(m) == 1) {
            hits += 1;
        }
    }
    Ok(hits as f64 / data.len() as f64)
}

/// Robust objective on the training set through the kernel expansion,
/// using the cached norm.
pub fn kernel_objective(model: &KernelModel) -> f64 {
    let data = &model.gram.data;
    let r = model.sigma * model.nu;
    (0..model.len())
        .map(|m| erf_perspective_or_limit(r, 1.0 - data.y(m) * model.train_margin(m)))
        .sum()
}

#[derive(Debug, Clone)]
pub struct KernelTrainReport {
    pub model: KernelModel,
    pub objective_trace: Vec<(usize, f64)>,
    pub iterations_run: usize,
    pub converged: bool,
}

/// KEN-GURU from `α = 0`. Sampling and stopping follow [`crate::train_guru`]
/// exactly, so with the linear kernel both produce the same iterates up to
/// rounding.
pub fn train_ken_guru(
    data: &Dataset,
    kernel: KernelSpec,
    sigma: f64,
    cfg: &TrainConfig,
) -> Result<KernelTrainReport> {
    check_sigma(sigma)?;
    cfg.validate()?;
    let mut model = KernelModel::zeros(data, kernel, sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut stop = StopRule::new(cfg.epsilon, kernel_objective(&model));
    let mut converged = false;
    let mut t = 0;
    while t < cfg.max_iters {
        t += 1;
        let i = sample_index(&mut rng, model.len());
        ken_guru_step(&mut model, i, t, cfg.eta0)?;
        if t % cfg.eval_period == 0 && stop.record(t, kernel_objective(&model))? {
            converged = true;
            break;
        }
    }
    if stop.trace.last().map(|p| p.0) != Some(t) {
        stop.record(t, kernel_objective(&model))?;
    }
    Ok(KernelTrainReport {
        model,
        objective_trace: stop.trace,
        iterations_run: t,
        converged,
    })
}
