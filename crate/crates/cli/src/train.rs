use std::collections::BTreeMap;
use std::fmt;

use clap::ValueEnum;
use gurukit_core::kernel::train_ken_guru;
use gurukit_core::model_io::ModelFile;
use gurukit_core::{
    train_asvc, train_baseline_svm, train_guru, train_m_guru, train_m_guru_s2, Dataset, KernelSpec, TrainConfig,
};
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::predictor::Predictor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    Guru,
    KenGuru,
    MGuru,
    MGuruS2,
    Asvc,
    Svm,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Guru => "guru",
            Algo::KenGuru => "ken-guru",
            Algo::MGuru => "m-guru",
            Algo::MGuruS2 => "m-guru-s2",
            Algo::Asvc => "asvc",
            Algo::Svm => "svm",
        }
    }

    /// Default initial learning rate. The multiclass trainers move every
    /// class vector per sample and are steadier with a smaller step.
    pub fn default_eta0(self) -> f64 {
        match self {
            Algo::MGuru | Algo::MGuruS2 => 0.25,
            _ => 1.0,
        }
    }

    pub fn uses_sigma(self) -> bool {
        matches!(self, Algo::Guru | Algo::KenGuru | Algo::MGuru | Algo::MGuruS2)
    }

    pub fn uses_lambda(self) -> bool {
        matches!(self, Algo::Asvc | Algo::Svm)
    }

    pub fn is_multiclass(self) -> bool {
        matches!(self, Algo::MGuru | Algo::MGuruS2)
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub const DEFAULT_SIGMA: f64 = 1.0;
pub const DEFAULT_LAMBDA: f64 = 1.0;
pub const DEFAULT_DELTA: f64 = 0.1;
pub const DEFAULT_ROUNDS: usize = 10;

/// Hyperparameters for one training run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrainParams {
    pub sigma: f64,
    pub lambda: f64,
    pub delta: f64,
    pub rounds: usize,
    pub kernel: KernelSpec,
    pub cfg: TrainConfig,
    /// Embed the training set in kernel model files.
    pub embed_train: bool,
}

impl TrainParams {
    pub fn new(algo: Algo) -> Self {
        Self {
            sigma: DEFAULT_SIGMA,
            lambda: DEFAULT_LAMBDA,
            delta: DEFAULT_DELTA,
            rounds: DEFAULT_ROUNDS,
            kernel: KernelSpec::Rbf { gamma: 1.0 },
            cfg: TrainConfig {
                eta0: algo.default_eta0(),
                ..TrainConfig::default()
            },
            embed_train: true,
        }
    }

    /// Flag-level checks, reported as usage errors.
    pub fn validate(&self, algo: Algo) -> Result<()> {
        if algo.uses_sigma() && !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(CliError::usage(format!("sigma must be positive, got {}", self.sigma)));
        }
        if algo.uses_lambda() && !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(CliError::usage(format!("lambda must be positive, got {}", self.lambda)));
        }
        if algo == Algo::Asvc {
            if !(self.delta >= 0.0 && self.delta.is_finite()) {
                return Err(CliError::usage(format!("delta must be nonnegative, got {}", self.delta)));
            }
            if self.rounds == 0 {
                return Err(CliError::usage("rounds must be at least 1"));
            }
        }
        if algo == Algo::KenGuru {
            self.kernel.validate().map_err(|e| CliError::usage(e.to_string()))?;
        }
        self.cfg.validate().map_err(|e| CliError::usage(e.to_string()))?;
        Ok(())
    }

    fn echo(&self, algo: Algo) -> BTreeMap<String, f64> {
        let mut p = BTreeMap::new();
        if algo.uses_sigma() {
            p.insert("sigma".into(), self.sigma);
        }
        if algo.uses_lambda() {
            p.insert("lambda".into(), self.lambda);
        }
        if algo == Algo::Asvc {
            p.insert("delta".into(), self.delta);
            p.insert("rounds".into(), self.rounds as f64);
        }
        p.insert("eta0".into(), self.cfg.eta0);
        p.insert("epsilon".into(), self.cfg.epsilon);
        p.insert("max_iters".into(), self.cfg.max_iters as f64);
        p.insert("eval_period".into(), self.cfg.eval_period as f64);
        p.insert("seed".into(), self.cfg.seed as f64);
        p
    }
}

/// A trained model with its file form and training trace.
#[derive(Debug, Clone)]
pub struct Trained {
    pub file: ModelFile,
    pub predictor: Predictor,
    /// `(update, objective)` pairs; ASVC reports one entry per round.
    pub trace: Vec<(usize, f64)>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
}

impl Trained {
    pub fn trace_rows(&self) -> Vec<TraceRow> {
        self.trace
            .iter()
            .map(|&(iteration, objective)| TraceRow { iteration, objective })
            .collect()
    }
}

pub fn train(algo: Algo, data: &Dataset, p: &TrainParams) -> Result<Trained> {
    p.validate(algo)?;
    if algo.is_multiclass() {
        data.require_multiclass()?;
    } else {
        data.require_binary()?;
    }
    let params = p.echo(algo);
    let name = algo.name();
    Ok(match algo {
        Algo::Guru | Algo::Svm => {
            let r = if algo == Algo::Guru {
                train_guru(data, p.sigma, &p.cfg)?
            } else {
                train_baseline_svm(data, p.lambda, &p.cfg)?
            };
            Trained {
                file: ModelFile::linear(name, &r.final_model, params),
                predictor: Predictor::Linear(r.final_model),
                trace: r.objective_trace,
                iterations: r.iterations_run,
                converged: r.converged,
            }
        }
        Algo::Asvc => {
            let r = train_asvc(data, p.delta, p.lambda, p.rounds, &p.cfg)?;
            Trained {
                file: ModelFile::linear(name, &r.model, params),
                predictor: Predictor::Linear(r.model),
                trace: r.round_objectives.iter().enumerate().map(|(k, v)| (k + 1, *v)).collect(),
                iterations: r.rounds_run,
                converged: r.converged,
            }
        }
        Algo::KenGuru => {
            let r = train_ken_guru(data, p.kernel, p.sigma, &p.cfg)?;
            let mut params = params;
            if let KernelSpec::Rbf { gamma } = p.kernel {
                params.insert("gamma".into(), gamma);
            }
            Trained {
                file: ModelFile::kernel(name, &r.model, params, p.embed_train),
                predictor: Predictor::Kernel(r.model),
                trace: r.objective_trace,
                iterations: r.iterations_run,
                converged: r.converged,
            }
        }
        Algo::MGuru | Algo::MGuruS2 => {
            let r = if algo == Algo::MGuru {
                train_m_guru(data, p.sigma, &p.cfg)?
            } else {
                train_m_guru_s2(data, p.sigma, &p.cfg)?
            };
            Trained {
                file: ModelFile::multiclass(name, &r.final_model, params),
                predictor: Predictor::Multiclass(r.final_model),
                trace: r.objective_trace,
                iterations: r.iterations_run,
                converged: r.converged,
            }
        }
    })
}
