use super::chain::{MarkovChain, SparseRows};
use crate::error::{Error, Result};

const MAX_ITERS: usize = 100_000;
const REL_TOL: f64 = 1e-12;

/// The one-period discount operator `L(z, z') = Phi(z, z') m(z')`.
#[derive(Debug, Clone)]
pub struct DiscountOperator {
    chain: MarkovChain,
    m_values: Vec<f64>,
    sparse: SparseRows,
}

impl DiscountOperator {
    pub fn new(chain: MarkovChain, m_values: Vec<f64>) -> Result<Self> {
        if m_values.len() != chain.len() {
            return Err(Error::param(
                "m_values",
                format!("expected {} values, got {}", chain.len(), m_values.len()),
            ));
        }
        if let Some(i) = m_values.iter().position(|&m| !(m > 0.0 && m.is_finite())) {
            return Err(Error::InvalidState {
                state: i,
                reason: format!("discount factor {} is not strictly positive", m_values[i]),
            });
        }
        let sparse = chain.sparse_rows();
        Ok(Self {
            chain,
            m_values,
            sparse,
        })
    }

    /// Same discount factor in every state.
    pub fn constant(chain: MarkovChain, m: f64) -> Result<Self> {
        let n = chain.len();
        Self::new(chain, vec![m; n])
    }

    pub fn chain(&self) -> &MarkovChain {
        &self.chain
    }

    pub fn m_values(&self) -> &[f64] {
        &self.m_values
    }

    /// `(L v)(z) = sum_z' Phi(z, z') m(z') v(z')`.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.chain.len()) {
            *o = self
                .sparse
                .row(i)
                .iter()
                .map(|&(j, p)| p * self.m_values[j] * v[j])
                .sum();
        }
    }

    /// Dense row-major copy of `L`.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        (0..self.chain.len())
            .map(|i| {
                self.chain
                    .row(i)
                    .iter()
                    .zip(&self.m_values)
                    .map(|(p, m)| p * m)
                    .collect()
            })
            .collect()
    }

    /// One-period expected discount factor `E_z[M']` for each current state.
    pub fn expected_discount(&self) -> Vec<f64> {
        let ones = vec![1.0; self.chain.len()];
        let mut out = vec![0.0; self.chain.len()];
        self.apply(&ones, &mut out);
        out
    }
}

/// Spectral radius of `L`, by power iteration from the all-ones vector.
///
/// The iteration runs on `L + tau I` so that periodic chains converge; the
/// shift moves the Perron root by exactly `tau`. Convergence is declared when
/// the Collatz-Wielandt bounds `min (Lv)_i / v_i <= s <= max (Lv)_i / v_i`
/// agree to a relative `1e-12`, or, for reducible operators where those bounds
/// need not meet, when the norm ratio stops changing.
pub fn spectral_radius(op: &DiscountOperator) -> Result<f64> {
    let n = op.chain.len();
    let tau = 0.25 * op.m_values.iter().sum::<f64>() / n as f64;
    let mut v = vec![1.0; n];
    let mut w = vec![0.0; n];
    let mut last = f64::NAN;
    let mut history = Vec::new();
    for iter in 0..MAX_ITERS {
        op.apply(&v, &mut w);
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi += tau * vi;
            let r = *wi / vi;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        let norm = w.iter().fold(0.0f64, |a, &x| a.max(x));
        let est = norm - tau;
        if hi - lo <= REL_TOL * (hi - tau).abs().max(f64::MIN_POSITIVE) {
            return Ok(0.5 * (hi + lo) - tau);
        }
        let change = ((est - last) / est).abs();
        if iter > 1000 && change <= 1e-15 {
            return Ok(est);
        }
        if iter % 1000 == 0 {
            history.push(hi - lo);
        }
        last = est;
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / norm;
        }
    }
    Err(Error::NoConvergence {
        what: "spectral radius power iteration",
        iterations: MAX_ITERS,
        residual: history.last().copied().unwrap_or(f64::NAN),
        history,
    })
}

/// Asymptotic yield `kappa(M) = -ln s(L)`.
pub fn kappa(op: &DiscountOperator) -> Result<f64> {
    Ok(-spectral_radius(op)?.ln())
}
