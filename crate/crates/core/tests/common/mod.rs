#![allow(dead_code)]

use storage_core::model::{build_economy, Economy, ModelSpec};
use storage_core::solver::{solve_egm, EquilibriumSolution, SolverOptions};

pub fn spec(k: usize, n: usize) -> ModelSpec {
    let mut s = ModelSpec::default();
    s.numerics.n_storage_grid = k;
    s.numerics.n_rate_states = n;
    s
}

pub fn solved(spec: &ModelSpec) -> (EquilibriumSolution, Economy) {
    let eco = build_economy(spec).unwrap();
    let sol = solve_egm(&eco, &SolverOptions::from_spec(spec).unwrap()).unwrap();
    (sol, eco)
}

pub fn small() -> (EquilibriumSolution, Economy) {
    solved(&spec(80, 11))
}
