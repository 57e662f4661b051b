//! Fixtures shared by the benchmarks.

use storage_core::model::{ModelSpec, Numerics};

/// Benchmark speculative-channel spec with a reduced grid.
pub fn small_spec(n_grid: usize, n_states: usize) -> ModelSpec {
    ModelSpec {
        numerics: Numerics {
            n_storage_grid: n_grid,
            n_rate_states: n_states,
            ..Numerics::default()
        },
        ..ModelSpec::default()
    }
}
