//! Competitive commodity storage with stochastically evolving interest rates.
//!
//! The crate is organised bottom-up:
//!
//! * [`process`] builds finite Markov chains for the exogenous state, their
//!   stationary laws, quadrature rules and the asymptotic yield of a discount
//!   process.
//! * [`model`] describes an economy (demand curve, output law, discounting)
//!   and checks the conditions under which an equilibrium exists.
//! * [`solver`] computes the equilibrium pricing and storage rules with an
//!   endogenous grid fixed-point iteration.
//! * [`simulation`], [`girf`] and [`diagnostics`] consume a solved model.
//! * [`io`] holds the file formats shared with the command line front end.

// Guards are written `!(x > 0.0)` on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod girf;
pub mod io;
pub mod model;
pub mod process;
pub mod simulation;
pub mod solver;

pub use diagnostics::{
    check_all, check_causal_ordering, check_negative_covariance, check_rate_dominance, check_regimes,
    conditional_covariance, euler_error, euler_error_sampled, EulerErrorReport, MeshSpec, PropertyCheck,
    PropertyReport,
};
pub use error::{Error, Result};
pub use girf::{girf, mit_irf, percentile_state, Conditioning, GirfResult, GirfSpec, MitResult, MitSpec};
pub use model::{
    build_economy, rescale_economy, validate, ActivityProcess, ChainKind, DemandCurve, Economy, ModelSpec,
    Numerics, RateProcess, ValidationReport,
};
pub use process::{
    discretize_var1, kappa, spectral_radius, stationary_distribution, tauchen_ar1, truncated_normal_rule,
    DiscountOperator, MarkovChain, QuadratureRule,
};
pub use simulation::{
    conditional_volatility, moments, simulate, stationary_sample, MomentSet, SimulationResult,
};
pub use solver::{
    egm_step, mit_operator_step, price_at, solve_constant_rate, solve_egm, storage_at, EquilibriumSolution,
    InitialGuess, SolverOptions, StorageGrid,
};
