use super::chain::MarkovChain;
use super::normal;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Equally spaced grid of `n` points on `center +- half_width`.
fn grid(center: f64, half_width: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![center];
    }
    let step = 2.0 * half_width / (n - 1) as f64;
    (0..n).map(|i| center - half_width + step * i as f64).collect()
}

/// Cell boundaries: midpoints between grid points, open at both ends.
fn cell_bounds(points: &[f64]) -> Vec<(f64, f64)> {
    let n = points.len();
    (0..n)
        .map(|i| {
            let lo = if i == 0 {
                f64::NEG_INFINITY
            } else {
                0.5 * (points[i - 1] + points[i])
            };
            let hi = if i + 1 == n {
                f64::INFINITY
            } else {
                0.5 * (points[i] + points[i + 1])
            };
            (lo, hi)
        })
        .collect()
}

/// Tauchen discretisation of `x' = mu + rho (x - mu) + sigma e`, `e ~ N(0,1)`.
///
/// `sigma` is the innovation standard deviation; the grid spans `coverage`
/// unconditional standard deviations on either side of `mu`.
pub fn tauchen_ar1(mu: f64, rho: f64, sigma: f64, n_states: usize, coverage: f64) -> Result<MarkovChain> {
    if !(rho.abs() < 1.0) {
        return Err(Error::param(
            "rho",
            "autoregressive coefficient must lie in (-1, 1)",
        ));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::param("sigma", "must be positive"));
    }
    if n_states < 1 {
        return Err(Error::param("n_states", "need at least one state"));
    }
    if !(coverage > 0.0) {
        return Err(Error::param("coverage", "must be positive"));
    }
    let sd = sigma / (1.0 - rho * rho).sqrt();
    let points = grid(mu, coverage * sd, n_states);
    let bounds = cell_bounds(&points);
    let rows = points
        .iter()
        .map(|&x| {
            let mean = mu + rho * (x - mu);
            bounds
                .iter()
                .map(|&(lo, hi)| normal::cell_mass((lo - mean) / sigma, (hi - mean) / sigma))
                .collect()
        })
        .collect();
    let states = points.into_iter().map(|x| vec![x]).collect();
    MarkovChain::from_unnormalized(states, rows)
}

/// Parameters of the joint rate/activity process
///
/// ```text
/// R'  = mu_r + rho_r (R - mu_r) + sigma_r sqrt(1 - rho_r^2) e'
/// A'  = rho_a A - gamma (R' - mu_r)
/// ```
///
/// `sigma_r` is the unconditional standard deviation of the rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarSpec {
    pub mu_r: f64,
    pub rho_r: f64,
    pub sigma_r: f64,
    pub rho_a: f64,
    pub gamma: f64,
}

impl VarSpec {
    pub fn innovation_sd(&self) -> f64 {
        self.sigma_r * (1.0 - self.rho_r * self.rho_r).sqrt()
    }

    /// Stationary covariance of `(R, A)` and variance of `A`.
    pub fn stationary_moments(&self) -> (f64, f64) {
        let s2 = self.sigma_r * self.sigma_r;
        let cov = -self.gamma * s2 / (1.0 - self.rho_r * self.rho_a);
        let var_a = (self.gamma * self.gamma * s2 - 2.0 * self.rho_a * self.gamma * self.rho_r * cov)
            / (1.0 - self.rho_a * self.rho_a);
        (cov, var_a)
    }

    /// Conditional mean of `(R', A')` given `(R, A)`.
    pub fn conditional_mean(&self, r: f64, a: f64) -> (f64, f64) {
        let dr = self.rho_r * (r - self.mu_r);
        (self.mu_r + dr, self.rho_a * a - self.gamma * dr)
    }
}

/// Discretises the joint rate/activity process on a product grid.
///
/// Both variables are driven by the single rate innovation, so each cell
/// probability is the normal mass of the innovations that put `R'` in its rate
/// cell and `A'` in its activity cell. Rate cells follow [`tauchen_ar1`];
/// activity cells span `coverage` stationary standard deviations of `A`.
/// Because the joint law is degenerate, the product chain has transient
/// states; the result is restricted to the closed class containing the state
/// nearest `(mu_r, 0)`.
pub fn discretize_var1(
    spec: &VarSpec,
    n_states_per_dim: (usize, usize),
    coverage: f64,
) -> Result<MarkovChain> {
    let radius = spec.rho_r.abs().max(spec.rho_a.abs());
    if !(radius < 1.0) {
        return Err(Error::NonStationary { radius });
    }
    if !(spec.sigma_r > 0.0) {
        return Err(Error::param("sigma_r", "must be positive"));
    }
    if !(spec.gamma >= 0.0) {
        return Err(Error::param("gamma", "must be nonnegative"));
    }
    let (nr, na) = n_states_per_dim;
    if nr < 1 || na < 1 {
        return Err(Error::param(
            "n_states_per_dim",
            "need at least one state per dimension",
        ));
    }
    let s = spec.innovation_sd();
    let r_pts = grid(spec.mu_r, coverage * spec.sigma_r, nr);
    let (_, var_a) = spec.stationary_moments();
    let a_pts = if spec.gamma == 0.0 {
        vec![0.0]
    } else {
        grid(0.0, coverage * var_a.sqrt(), na)
    };
    let r_cells = cell_bounds(&r_pts);
    let a_cells = cell_bounds(&a_pts);
    let na = a_pts.len();

    let mut states = Vec::with_capacity(nr * na);
    for &r in &r_pts {
        for &a in &a_pts {
            states.push(vec![r, a]);
        }
    }
    let rows: Vec<Vec<f64>> = states
        .iter()
        .map(|st| {
            let (r, a) = (st[0], st[1]);
            let mean_r = spec.mu_r + spec.rho_r * (r - spec.mu_r);
            let mut row = vec![0.0; nr * na];
            for (j, &(rlo, rhi)) in r_cells.iter().enumerate() {
                for (l, &(alo, ahi)) in a_cells.iter().enumerate() {
                    // A' = rho_a a - gamma (R' - mu) lies in [alo, ahi] iff R' lies in
                    // [mu + (rho_a a - ahi)/gamma, mu + (rho_a a - alo)/gamma].
                    let (lo, hi) = if spec.gamma == 0.0 {
                        (rlo, rhi)
                    } else {
                        let base = spec.mu_r + spec.rho_a * a / spec.gamma;
                        (rlo.max(base - ahi / spec.gamma), rhi.min(base - alo / spec.gamma))
                    };
                    row[j * na + l] = normal::cell_mass((lo - mean_r) / s, (hi - mean_r) / s);
                }
            }
            row
        })
        .collect();
    let full = MarkovChain::from_unnormalized(states, rows)?;
    let start = (nr / 2) * na + na / 2;
    let (chain, _) = full.recurrent_class(start);
    Ok(chain)
}
