use gurukit_core::data::inject_uniform_noise;
use gurukit_core::Dataset;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::predictor::Predictor;

pub const DEFAULT_REPEATS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseRow {
    pub model: String,
    pub split: String,
    pub x: f64,
    pub mean_accuracy: f64,
    /// Population standard deviation over the repeats.
    pub std: f64,
    pub repeats: usize,
}

/// Seed for one noisy copy. Every model sees the same noisy copy for a
/// given (split, x, repeat), so curves are compared on identical inputs.
fn job_seed(seed: u64, split: usize, xi: usize, repeat: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ ((split as u64) << 48)
        ^ ((xi as u64) << 24)
        ^ repeat as u64
}

/// Accuracy of every model on noisy copies of every split, for each noise
/// magnitude in `grid`, aggregated over `repeats` draws. At `x = 0` the
/// copies are exact, so that row is the clean accuracy.
pub fn noise_curve(
    models: &[(String, Predictor)],
    splits: &[(String, &Dataset)],
    grid: &[f64],
    repeats: usize,
    seed: u64,
) -> Result<Vec<NoiseRow>> {
    if repeats == 0 {
        return Err(CliError::usage("repeats must be at least 1"));
    }
    if models.is_empty() || splits.is_empty() {
        return Err(CliError::usage("need at least one model and one evaluation split"));
    }
    if let Some(x) = grid.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
        return Err(CliError::usage(format!("noise magnitudes must be nonnegative, got {x}")));
    }
    let jobs: Vec<(usize, usize, usize)> = (0..splits.len())
        .flat_map(|s| (0..grid.len()).flat_map(move |xi| (0..repeats).map(move |r| (s, xi, r))))
        .collect();
    // accuracies[job][model]
    let accuracies: Vec<Result<Vec<f64>>> = jobs
        .par_iter()
        .map(|&(s, xi, r)| {
            let noisy = inject_uniform_noise(splits[s].1, grid[xi], job_seed(seed, s, xi, r))?;
            models.iter().map(|(_, m)| m.accuracy(&noisy)).collect()
        })
        .collect();
    let accuracies = accuracies.into_iter().collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for (mi, (name, _)) in models.iter().enumerate() {
        for (s, (split, _)) in splits.iter().enumerate() {
            for (xi, &x) in grid.iter().enumerate() {
                let start = (s * grid.len() + xi) * repeats;
                let vals: Vec<f64> = accuracies[start..start + repeats].iter().map(|a| a[mi]).collect();
                let mean = vals.iter().sum::<f64>() / repeats as f64;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / repeats as f64;
                rows.push(NoiseRow {
                    model: name.clone(),
                    split: split.clone(),
                    x,
                    mean_accuracy: mean,
                    std: var.sqrt(),
                    repeats,
                });
            }
        }
    }
    Ok(rows)
}
