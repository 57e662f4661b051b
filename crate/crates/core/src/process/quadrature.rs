use super::normal;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

/// Nodes and probability weights of a discrete approximation to a law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn new(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(Error::param(
                "weights",
                "need as many weights as nodes (at least one)",
            ));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) || nodes.iter().any(|x| !x.is_finite()) {
            return Err(Error::param(
                "weights",
                "weights must be nonnegative and nodes finite",
            ));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::param("weights", format!("weights sum to {sum}, not 1")));
        }
        Ok(Self { nodes, weights })
    }

    /// Point mass at `x`.
    pub fn degenerate(x: f64) -> Self {
        Self {
            nodes: vec![x],
            weights: vec![1.0],
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.expect(|x| x)
    }

    pub fn min_node(&self) -> f64 {
        self.nodes.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_node(&self) -> f64 {
        self.nodes.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Affine image `a + b x` of the rule.
    pub fn affine(&self, a: f64, b: f64) -> Self {
        Self {
            nodes: self.nodes.iter().map(|x| a + b * x).collect(),
            weights: self.weights.clone(),
        }
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    if n <= 1 {
        return (vec![0.0; n], vec![2.0; n]);
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Gaussian quadrature for a normal law truncated at `trunc_sd` standard
/// deviations.
///
/// The recurrence coefficients of the orthogonal polynomials are obtained by
/// the discretised Stieltjes procedure on a fine Gauss-Legendre mesh, and the
/// nodes and weights by Golub-Welsch.
pub fn truncated_normal_rule(mu: f64, sigma: f64, trunc_sd: f64, n_nodes: usize) -> Result<QuadratureRule> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::param("sigma", "must be positive"));
    }
    if !(trunc_sd > 0.0 && trunc_sd.is_finite()) {
        return Err(Error::param("trunc_sd", "must be positive and finite"));
    }
    if n_nodes == 0 {
        return Err(Error::param("n_nodes", "need at least one node"));
    }
    if n_nodes == 1 {
        return Ok(QuadratureRule::degenerate(mu));
    }
    let c = trunc_sd;
    let (gx, gw) = gauss_legendre((4 * n_nodes).max(200));
    let xs: Vec<f64> = gx.iter().map(|t| c * t).collect();
    let mut ws: Vec<f64> = gx
        .iter()
        .zip(&gw)
        .map(|(t, w)| c * w * normal::pdf(c * t))
        .collect();
    let total: f64 = ws.iter().sum();
    ws.iter_mut().for_each(|w| *w /= total);

    let n = n_nodes;
    let mut alpha = vec![0.0; n];
    let mut beta = vec![0.0; n];
    let mut p_prev = vec![0.0; xs.len()];
    let mut p_cur = vec![1.0; xs.len()];
    let mut norm_prev = 1.0;
    for k in 0..n {
        let norm: f64 = ws.iter().zip(&p_cur).map(|(w, p)| w * p * p).sum();
        let xnorm: f64 = ws
            .iter()
            .zip(&p_cur)
            .zip(&xs)
            .map(|((w, p), x)| w * x * p * p)
            .sum();
        alpha[k] = xnorm / norm;
        beta[k] = if k == 0 { norm } else { norm / norm_prev };
        let next: Vec<f64> = xs
            .iter()
            .zip(&p_cur)
            .zip(&p_prev)
            .map(|((x, pc), pp)| (x - alpha[k]) * pc - beta[k] * pp)
            .collect();
        p_prev = std::mem::replace(&mut p_cur, next);
        norm_prev = norm;
    }

    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        jac[(k, k)] = alpha[k];
        if k + 1 < n {
            let b = beta[k + 1].sqrt();
            jac[(k, k + 1)] = b;
            jac[(k + 1, k)] = b;
        }
    }
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // The truncation is symmetric, so symmetrise away rounding noise.
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let j = n - 1 - i;
        nodes[i] = 0.5 * (pairs[i].0 - pairs[j].0);
        weights[i] = 0.5 * (pairs[i].1 + pairs[j].1);
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    let sum: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= sum);
    QuadratureRule::new(nodes, weights).map(|r| r.affine(mu, sigma))
}
