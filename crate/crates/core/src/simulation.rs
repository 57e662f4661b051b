//! Equilibrium paths, stationary samples and moments.

use crate::error::{Error, Result};
use crate::model::Economy;
use crate::process::normal;
use crate::solver::EquilibriumSolution;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Default length and burn-in of a stationary sample.
pub const STATIONARY_T: usize = 200_000;
pub const STATIONARY_BURN: usize = 50_000;
/// Default length and burn-in of the path used for Euler errors.
pub const EULER_T: usize = 20_000;
pub const EULER_BURN: usize = 1_000;

/// Stream of uniform pairs keyed by `(seed, stream, t)`.
///
/// Draws for period `t` sit at a fixed position of the ChaCha keystream, so a
/// path's numbers do not depend on which thread runs it or in what order.
pub struct DrawStream {
    rng: ChaCha8Rng,
    next_t: u64,
}

impl DrawStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, next_t: 0 }
    }

    /// The two uniforms in `(0, 1)` belonging to period `t`.
    pub fn at(&mut self, t: u64) -> (f64, f64) {
        if t != self.next_t {
            self.rng.set_word_pos(u128::from(t) * 4);
        }
        self.next_t = t + 1;
        (to_unit(self.rng.next_u64()), to_unit(self.rng.next_u64()))
    }
}

fn to_unit(x: u64) -> f64 {
    ((x >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Inverse-cdf samplers for the exogenous chain and the output draw.
#[derive(Debug, Clone)]
pub struct Sampler {
    cum: Vec<Vec<(usize, f64)>>,
    eta_mean: f64,
    eta_sd: f64,
    cdf_lo: f64,
    cdf_span: f64,
    lo: f64,
    hi: f64,
}

impl Sampler {
    pub fn new(economy: &Economy) -> Self {
        let rows = economy.chain.sparse_rows();
        let cum = (0..rows.len())
            .map(|i| {
                let mut acc = 0.0;
                rows.row(i)
                    .iter()
                    .map(|&(j, p)| {
                        acc += p;
                        (j, acc)
                    })
                    .collect()
            })
            .collect();
        let (mu, sd, c) = economy.eta_law;
        Self {
            cum,
            eta_mean: mu,
            eta_sd: sd,
            cdf_lo: normal::cdf(-c),
            cdf_span: normal::cdf(c) - normal::cdf(-c),
            lo: mu - c * sd,
            hi: mu + c * sd,
        }
    }

    pub fn next_state(&self, from: usize, u: f64) -> usize {
        let row = &self.cum[from];
        let total = row.last().map_or(1.0, |r| r.1);
        let target = u * total;
        let k = row.partition_point(|&(_, c)| c <= target).min(row.len() - 1);
        row[k].0
    }

    pub fn eta(&self, u: f64) -> f64 {
        if self.eta_sd == 0.0 {
            return self.eta_mean;
        }
        let z = normal::ppf(self.cdf_lo + u * self.cdf_span);
        (self.eta_mean + self.eta_sd * z).clamp(self.lo, self.hi)
    }
}

/// A simulated equilibrium path (retained periods only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub i: Vec<f64>,
    pub y: Vec<f64>,
    pub z_index: Vec<usize>,
    pub rate_annual: Vec<f64>,
    pub activity: Vec<f64>,
    pub seed: u64,
    pub t_total: usize,
    pub burn: usize,
}

impl SimulationResult {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Default starting point: mean output in the middle state of the chain.
pub fn default_start(economy: &Economy) -> (f64, usize) {
    let j = economy.n_states() / 2;
    (economy.y(j, economy.eta_law.0).max(economy.b), j)
}

/// Simulates `t_total` periods from `(x0, z0)` using stream `stream`, keeping
/// periods `burn..t_total`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_from(
    sol: &EquilibriumSolution,
    economy: &Economy,
    x0: f64,
    z0: usize,
    t_total: usize,
    burn: usize,
    seed: u64,
    stream: u64,
) -> Result<SimulationResult> {
    if t_total <= burn {
        return Err(Error::param("T", "must exceed the burn-in"));
    }
    if z0 >= economy.n_states() {
        return Err(Error::InvalidState {
            state: z0,
            reason: "initial state outside the chain".into(),
        });
    }
    if x0 < economy.b {
        return Err(Error::BelowLowerBound { x: x0, b: economy.b });
    }
    let sampler = Sampler::new(economy);
    let mut draws = DrawStream::new(seed, stream);
    let keep = t_total - burn;
    let mut out = SimulationResult {
        x: Vec::with_capacity(keep),
        p: Vec::with_capacity(keep),
        i: Vec::with_capacity(keep),
        y: Vec::with_capacity(keep),
        z_index: Vec::with_capacity(keep),
        rate_annual: Vec::with_capacity(keep),
        activity: Vec::with_capacity(keep),
        seed,
        t_total,
        burn,
    };
    let disc = (-economy.delta).exp();
    let (mut x, mut z, mut y) = (x0, z0, x0);
    for t in 0..t_total {
        if t > 0 {
            let (u1, u2) = draws.at(t as u64);
            let inv = sol.storage_unchecked(x, z);
            z = sampler.next_state(z, u1);
            y = economy.y(z, sampler.eta(u2));
            x = disc * inv + y;
        }
        if t >= burn {
            out.x.push(x);
            out.p.push(sol.price_unchecked(x, z));
            out.i.push(sol.storage_unchecked(x, z));
            out.y.push(y);
            out.z_index.push(z);
            out.rate_annual.push(economy.rate_annual[z]);
            out.activity.push(economy.activity[z]);
        }
    }
    Ok(out)
}

/// Simulates an equilibrium path from the default starting point.
pub fn simulate(
    sol: &EquilibriumSolution,
    economy: &Economy,
    t_total: usize,
    burn: usize,
    seed: u64,
) -> Result<SimulationResult> {
    let (x0, z0) = default_start(economy);
    simulate_from(sol, economy, x0, z0, t_total, burn, seed, 0)
}

/// Long path approximating the stationary distribution of `(X, z)`.
pub fn stationary_sample(
    sol: &EquilibriumSolution,
    economy: &Economy,
    seed: u64,
) -> Result<SimulationResult> {
    simulate(sol, economy, STATIONARY_T, STATIONARY_BURN, seed)
}

/// Price moments of a path, with standard errors from 100 batches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub n: usize,
    pub mean_p: f64,
    pub sd_p: f64,
    pub cv: f64,
    /// `None` for a constant series.
    pub ac1: Option<f64>,
    pub skew: Option<f64>,
    pub mean_x: f64,
    pub sd_x: f64,
    pub mean_i: f64,
    pub sd_i: f64,
    pub se_cv: f64,
    pub se_ac1: Option<f64>,
    pub se_skew: Option<f64>,
}

const MIN_MOMENT_LEN: usize = 10_000;
const N_BATCHES: usize = 100;

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

type PriceStats = (f64, Option<f64>, Option<f64>);

/// `(cv, ac1, skew)` of a series.
fn price_stats(p: &[f64]) -> PriceStats {
    let (mean, sd) = mean_sd(p);
    if sd == 0.0 || sd <= 1e-14 * mean.abs() {
        return (0.0, None, None);
    }
    let n = p.len() as f64;
    let m3 = p.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
    let (a, b) = (&p[1..], &p[..p.len() - 1]);
    let (ma, sa) = mean_sd(a);
    let (mb, sb) = mean_sd(b);
    let cov = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / a.len() as f64;
    (sd / mean, Some(cov / (sa * sb)), Some(m3 / sd.powi(3)))
}

fn batch_se(values: &[f64]) -> f64 {
    let (_, sd) = mean_sd(values);
    sd * (values.len() as f64 / (values.len() as f64 - 1.0)).sqrt() / (values.len() as f64).sqrt()
}

/// Coefficient of variation, first autocorrelation and skewness of prices.
pub fn moments(result: &SimulationResult) -> Result<MomentSet> {
    let n = result.p.len();
    if n < MIN_MOMENT_LEN {
        return Err(Error::param(
            "T",
            format!("moments need at least {MIN_MOMENT_LEN} retained periods, got {n}"),
        ));
    }
    let (mean_p, sd_p) = mean_sd(&result.p);
    let (cv, ac1, skew) = price_stats(&result.p);
    let size = n / N_BATCHES;
    let batches: Vec<_> = (0..N_BATCHES)
        .map(|b| price_stats(&result.p[b * size..(b + 1) * size]))
        .collect();
    let collect = |f: fn(&PriceStats) -> Option<f64>| -> Option<Vec<f64>> { batches.iter().map(f).collect() };
    let (mean_x, sd_x) = mean_sd(&result.x);
    let (mean_i, sd_i) = mean_sd(&result.i);
    Ok(MomentSet {
        n,
        mean_p,
        sd_p,
        cv,
        ac1,
        skew,
        mean_x,
        sd_x,
        mean_i,
        sd_i,
        se_cv: batch_se(&batches.iter().map(|b| b.0).collect::<Vec<_>>()),
        se_ac1: ac1.and(collect(|b| b.1)).map(|v| batch_se(&v)),
        se_skew: skew.and(collect(|b| b.2)).map(|v| batch_se(&v)),
    })
}

/// First two conditional moments of next period's price, by enumeration over
/// the chain and the output rule.
pub fn conditional_price_moments(
    sol: &EquilibriumSolution,
    economy: &Economy,
    x: f64,
    j: usize,
) -> (f64, f64) {
    let disc = (-economy.delta).exp();
    let carry = disc * sol.storage_unchecked(x, j);
    let (mut m1, mut m2) = (0.0, 0.0);
    for (m, &phi) in economy.chain.row(j).iter().enumerate() {
        if phi == 0.0 {
            continue;
        }
        for (&eta, &w) in economy.eta.nodes().iter().zip(economy.eta.weights()) {
            let price = sol.price_unchecked(carry + economy.y(m, eta), m);
            m1 += phi * w * price;
            m2 += phi * w * price * price;
        }
    }
    (m1, m2)
}

/// Conditional standard deviation of next period's price from `(x, z_j)`.
pub fn conditional_volatility(sol: &EquilibriumSolution, economy: &Economy, x: f64, j: usize) -> Result<f64> {
    if j >= economy.n_states() {
        return Err(Error::InvalidState {
            state: j,
            reason: "outside the chain".into(),
        });
    }
    if x < economy.b {
        return Err(Error::BelowLowerBound { x, b: economy.b });
    }
    let (m1, m2) = conditional_price_moments(sol, economy, x, j);
    Ok((m2 - m1 * m1).max(0.0).sqrt())
}
