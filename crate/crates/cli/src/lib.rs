//! Command logic behind the `gurukit` binary: training any of the
//! supported models, parameter sweeps with cross-validation selection,
//! noise-resistance curves and dual certification.
//!
//! Grid points and noise repeats run on a rayon pool; results are
//! gathered and written in grid order, so outputs do not depend on the
//! worker count.

pub mod certify;
pub mod error;
pub mod noise;
pub mod output;
pub mod predictor;
pub mod sweep;
pub mod train;

pub use error::{CliError, Result};
pub use predictor::Predictor;
pub use sweep::{run_sweep, Grid, SplitAccess, SweepParam, SweepSpec};
pub use train::{train, Algo, TrainParams, Trained};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "GURUKIT_WORKERS";

/// Pool with `workers` threads; `None` lets rayon pick (one per core).
pub fn build_pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        if n == 0 {
            return Err(CliError::usage("workers must be at least 1"));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(|e| CliError::usage(e.to_string()))
}
