//! Finite-state representations of the exogenous processes.

mod chain;
mod discount;
pub mod normal;
mod quadrature;
mod tauchen;

pub use chain::{stationary_distribution, MarkovChain, SparseRows};
pub use discount::{kappa, spectral_radius, DiscountOperator};
pub use quadrature::{gauss_legendre, truncated_normal_rule, QuadratureRule};
pub use tauchen::{discretize_var1, tauchen_ar1, VarSpec};
