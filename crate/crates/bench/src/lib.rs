//! Fixtures shared by the benchmarks.

use gurukit_core::data::{gen_gaussian_toy, gen_radial_ring, RingSpec, ToyKind};
use gurukit_core::linear::TrainConfig;
use gurukit_core::Dataset;

/// Training split of a Gaussian toy with `n` samples per split.
pub fn toy(kind: ToyKind, n: usize) -> Dataset {
    gen_gaussian_toy(kind, n, 1).expect("toy generator").0
}

pub fn ring(n: usize) -> Dataset {
    gen_radial_ring(n, RingSpec::default(), 1).expect("ring generator")
}

/// Fixed iteration budget with the stopping rule disabled, so every run
/// does the same amount of work.
pub fn fixed_budget(iters: usize) -> TrainConfig {
    TrainConfig {
        max_iters: iters,
        epsilon: f64::MIN_POSITIVE,
        eval_period: iters,
        ..TrainConfig::default()
    }
}
