use std::fmt;
use std::str::FromStr;

use clap::ValueEnum;
use gurukit_core::Dataset;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::train::{train, Algo, TrainParams, Trained};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Sigma,
    Lambda,
    Eta0,
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParam::Sigma => "sigma",
            SweepParam::Lambda => "lambda",
            SweepParam::Eta0 => "eta0",
        })
    }
}

/// Geometric grid `base^k` for `k = min_exp..=max_exp`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub base: f64,
    pub min_exp: i32,
    pub max_exp: i32,
}

impl Grid {
    pub fn new(base: f64, min_exp: i32, max_exp: i32) -> Result<Self> {
        if !(base > 1.0 && base.is_finite()) {
            return Err(CliError::usage(format!("grid base must exceed 1, got {base}")));
        }
        if min_exp > max_exp {
            return Err(CliError::usage(format!(
                "grid exponents out of order: {min_exp} > {max_exp}"
            )));
        }
        Ok(Self { base, min_exp, max_exp })
    }

    /// Wide grids: σ over 2^-20..2^20, λ over 4^-15..4^15, η₀ over 4^-10..4^10.
    pub fn wide(param: SweepParam) -> Self {
        match param {
            SweepParam::Sigma => Self { base: 2.0, min_exp: -20, max_exp: 20 },
            SweepParam::Lambda => Self { base: 4.0, min_exp: -15, max_exp: 15 },
            SweepParam::Eta0 => Self { base: 4.0, min_exp: -10, max_exp: 10 },
        }
    }

    /// Narrow grid `2^-6..2^6` for quick runs.
    pub fn desk() -> Self {
        Self { base: 2.0, min_exp: -6, max_exp: 6 }
    }

    pub fn values(&self) -> Vec<f64> {
        (self.min_exp..=self.max_exp).map(|k| self.base.powi(k)).collect()
    }
}

/// Parses `base:min_exp:max_exp`, e.g. `2:-4:4`.
impl FromStr for Grid {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || CliError::usage(format!("grid must look like base:min_exp:max_exp, got `{s}`"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let base = parts[0].trim().parse().map_err(|_| bad())?;
        let lo = parts[1].trim().parse().map_err(|_| bad())?;
        let hi = parts[2].trim().parse().map_err(|_| bad())?;
        Grid::new(base, lo, hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepSpec {
    pub parameter: SweepParam,
    pub grid: Grid,
}

impl SweepSpec {
    pub fn validate(&self, algo: Algo) -> Result<()> {
        let ok = match self.parameter {
            SweepParam::Sigma => algo.uses_sigma(),
            SweepParam::Lambda => algo.uses_lambda(),
            SweepParam::Eta0 => true,
        };
        if ok {
            Ok(())
        } else {
            Err(CliError::usage(format!("{algo} has no {} parameter to sweep", self.parameter)))
        }
    }

    fn apply(&self, base: &TrainParams, value: f64) -> TrainParams {
        let mut p = *base;
        match self.parameter {
            SweepParam::Sigma => p.sigma = value,
            SweepParam::Lambda => p.lambda = value,
            SweepParam::Eta0 => p.cfg.eta0 = value,
        }
        p
    }
}

/// Read access to an evaluation split. The sweep reaches the test split
/// only through this, once, after selection; tests count the calls.
pub trait SplitAccess {
    fn dataset(&self) -> &Dataset;
}

impl SplitAccess for Dataset {
    fn dataset(&self) -> &Dataset {
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub param: f64,
    pub cv_accuracy: f64,
    /// Filled on the selected row only.
    pub test_accuracy: Option<f64>,
    pub final_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub selected: bool,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub selected: usize,
    pub model: Trained,
}

impl SweepResult {
    pub fn selected_row(&self) -> &SweepRow {
        &self.rows[self.selected]
    }
}

/// Train at every grid point (in parallel on the current rayon pool),
/// pick the best cross-validation accuracy with ties going to the smaller
/// parameter, then evaluate that model on the test split.
pub fn run_sweep(
    algo: Algo,
    base: &TrainParams,
    spec: &SweepSpec,
    train_set: &Dataset,
    cv: &Dataset,
    test: &impl SplitAccess,
) -> Result<SweepResult> {
    spec.validate(algo)?;
    let values = spec.grid.values();
    for &v in &values {
        spec.apply(base, v).validate(algo)?;
    }
    let runs: Vec<Result<(Trained, f64)>> = values
        .par_iter()
        .map(|&v| {
            let t = train(algo, train_set, &spec.apply(base, v))?;
            let acc = t.predictor.accuracy(cv)?;
            Ok((t, acc))
        })
        .collect();
    let mut rows = Vec::with_capacity(values.len());
    let mut models = Vec::with_capacity(values.len());
    for (&v, run) in values.iter().zip(runs) {
        let (t, acc) = run?;
        rows.push(SweepRow {
            param: v,
            cv_accuracy: acc,
            test_accuracy: None,
            final_norm: t.predictor.norm(),
            iterations: t.iterations,
            converged: t.converged,
            selected: false,
        });
        models.push(t);
    }
    let mut selected = 0;
    for (k, r) in rows.iter().enumerate() {
        if r.cv_accuracy > rows[selected].cv_accuracy {
            selected = k;
        }
    }
    let model = models.swap_remove(selected);
    let test_acc = model.predictor.accuracy(test.dataset())?;
    rows[selected].selected = true;
    rows[selected].test_accuracy = Some(test_acc);
    Ok(SweepResult { rows, selected, model })
}
