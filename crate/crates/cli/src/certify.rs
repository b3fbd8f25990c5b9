use gurukit_core::dual::build_certificate;
use gurukit_core::linear::{batch_refine, RefineReport};
use gurukit_core::model_io::ModelFile;
use gurukit_core::{Dataset, DualCertificate, LinearModel};
use serde::Serialize;

use crate::error::{CliError, Result};

pub const DEFAULT_GRAD_TOL: f64 = 1e-8;
pub const DEFAULT_THRESHOLD: f64 = 1e-3;
pub const DEFAULT_REFINE_ITERS: usize = 500;

#[derive(Debug, Clone)]
pub struct Certification {
    pub refine: RefineReport,
    pub certificate: DualCertificate,
    pub threshold: f64,
}

impl Certification {
    pub fn passed(&self) -> bool {
        self.certificate.gap_rel < self.threshold
    }

    pub fn rows(&self) -> Vec<CertRow> {
        let c = &self.certificate;
        (0..c.alphas.len())
            .map(|i| CertRow {
                index: i,
                alpha: c.alphas[i],
                clamped: c.clamped[i],
                norm_estimate: c.norm_estimates[i].value,
                valid: c.norm_estimates[i].valid,
            })
            .collect()
    }

    pub fn summary(&self) -> CertSummary {
        let c = &self.certificate;
        CertSummary {
            sigma: c.sigma,
            gap_rel: c.gap_rel,
            dual_objective: c.dual_objective,
            primal_objective: c.primal_objective,
            constraint_lhs: c.constraint_lhs,
            constraint_rhs: c.constraint_rhs,
            tightness: c.tightness(),
            weight_norm: c.weight_norm,
            norm_spread: c.norm_spread(),
            valid_estimates: c.valid_estimates().count(),
            grad_norm: c.grad_norm,
            grad_tol: c.grad_tol,
            stationary: c.stationary(),
            refine_iterations: self.refine.iterations,
            threshold: self.threshold,
            passed: self.passed(),
        }
    }
}

/// Per-sample block of the certificate report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertRow {
    pub index: usize,
    pub alpha: f64,
    pub clamped: bool,
    pub norm_estimate: f64,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertSummary {
    pub sigma: f64,
    pub gap_rel: f64,
    pub dual_objective: f64,
    pub primal_objective: f64,
    pub constraint_lhs: f64,
    pub constraint_rhs: f64,
    pub tightness: f64,
    pub weight_norm: f64,
    pub norm_spread: Option<f64>,
    pub valid_estimates: usize,
    pub grad_norm: f64,
    pub grad_tol: f64,
    pub stationary: bool,
    pub refine_iterations: usize,
    pub threshold: f64,
    pub passed: bool,
}

/// Refine a linear binary model at `sigma` and certify the result.
/// With `refine_iters = 0` the model is certified as given.
pub fn certify(
    file: &ModelFile,
    data: &Dataset,
    sigma: f64,
    grad_tol: f64,
    refine_iters: usize,
    threshold: f64,
) -> Result<Certification> {
    if file.kind() != "linear" {
        return Err(CliError::usage("certification supports linear binary models"));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(CliError::usage(format!("sigma must be positive, got {sigma}")));
    }
    if !(grad_tol > 0.0) || !(threshold > 0.0) {
        return Err(CliError::usage("grad-tol and threshold must be positive"));
    }
    data.require_binary()?;
    let model = LinearModel::new(file.to_linear()?.w, sigma)?;
    let refine = batch_refine(data, sigma, &model, grad_tol, refine_iters)?;
    let certificate = build_certificate(data, &refine.model, grad_tol)?;
    Ok(Certification {
        refine,
        certificate,
        threshold,
    })
}
