//! Generalized impulse responses to an interest-rate impulse, and the
//! constant-rate MIT shock.

use crate::error::{Error, Result};
use crate::model::{Economy, ModelSpec};
use crate::simulation::{
    conditional_price_moments, simulate_from, stationary_sample, DrawStream, Sampler, SimulationResult,
};
use crate::solver::{
    constant_rate_economy, mit_operator_step, solve_egm, EquilibriumSolution, SolverOptions,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Rule used to map a shocked state onto the chain, reported in outputs.
pub const PROJECTION_RULE: &str =
    "nearest chain state in grid-step-scaled Euclidean distance, ties to the lower index";
/// Treatment of the transition draws across ensembles, reported in outputs.
pub const DRAW_SHARING: &str = "baseline and shocked paths share output draws and transition uniforms";

const CHUNK: usize = 1024;

/// How a conditioning value is specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum Conditioning {
    /// Mean of the stationary sample.
    Mean,
    /// Percentile (0 to 100) of the stationary sample.
    Percentile(f64),
    /// A level (availability, or gross annual rate for the exogenous state).
    Value(f64),
    /// A chain state index (exogenous state only).
    State(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GirfSpec {
    pub x0: Conditioning,
    pub z0: Conditioning,
    pub shock_bp: f64,
    pub horizon: usize,
    pub n_paths: usize,
    pub seed: u64,
    /// Also compute the conditional price volatility along both ensembles.
    pub volatility: bool,
}

impl Default for GirfSpec {
    fn default() -> Self {
        Self {
            x0: Conditioning::Mean,
            z0: Conditioning::Mean,
            shock_bp: 100.0,
            horizon: 16,
            n_paths: 100_000,
            seed: 1,
            volatility: true,
        }
    }
}

/// Horizon-indexed mean responses of shocked and baseline ensembles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GirfResult {
    pub baseline_price: Vec<f64>,
    pub shocked_price: Vec<f64>,
    pub baseline_inventory: Vec<f64>,
    pub shocked_inventory: Vec<f64>,
    pub baseline_volatility: Option<Vec<f64>>,
    pub shocked_volatility: Option<Vec<f64>>,
    /// Shocked minus baseline mean.
    pub irf_price: Vec<f64>,
    pub irf_inventory: Vec<f64>,
    pub irf_volatility: Option<Vec<f64>>,
    /// Percentage deviation from the baseline mean.
    pub irf_price_pct: Vec<f64>,
    pub irf_inventory_pct: Vec<f64>,
    pub irf_volatility_pct: Option<Vec<f64>>,
    pub x0: f64,
    pub z0: usize,
    pub shock_bp: f64,
    pub horizon: usize,
    pub n_paths: usize,
    pub seed: u64,
    pub projection_rule: String,
    pub draw_sharing: String,
}

fn pct(shocked: &[f64], base: &[f64]) -> Vec<f64> {
    shocked
        .iter()
        .zip(base)
        .map(|(s, b)| {
            if *b == 0.0 && *s == 0.0 {
                0.0
            } else {
                100.0 * (s - b) / b
            }
        })
        .collect()
}

impl GirfResult {
    fn from_sums(sums: &Sums, n: usize, meta: (f64, usize, f64, u64), volatility: bool) -> Self {
        let avg = |v: &[f64]| v.iter().map(|s| s / n as f64).collect::<Vec<_>>();
        let bp = avg(&sums.base[0]);
        let sp = avg(&sums.shock[0]);
        let bi = avg(&sums.base[1]);
        let si = avg(&sums.shock[1]);
        let (bv, sv) = if volatility {
            (Some(avg(&sums.base[2])), Some(avg(&sums.shock[2])))
        } else {
            (None, None)
        };
        let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>();
        Self {
            irf_price: diff(&sp, &bp),
            irf_inventory: diff(&si, &bi),
            irf_volatility: sv.as_ref().zip(bv.as_ref()).map(|(s, b)| diff(s, b)),
            irf_price_pct: pct(&sp, &bp),
            irf_inventory_pct: pct(&si, &bi),
            irf_volatility_pct: sv.as_ref().zip(bv.as_ref()).map(|(s, b)| pct(s, b)),
            baseline_price: bp,
            shocked_price: sp,
            baseline_inventory: bi,
            shocked_inventory: si,
            baseline_volatility: bv,
            shocked_volatility: sv,
            x0: meta.0,
            z0: meta.1,
            shock_bp: meta.2,
            horizon: sums.base[0].len() - 1,
            n_paths: n,
            seed: meta.3,
            projection_rule: PROJECTION_RULE.into(),
            draw_sharing: DRAW_SHARING.into(),
        }
    }
}

/// Per-horizon sums of price, inventory and volatility.
#[derive(Debug, Clone)]
struct Sums {
    base: [Vec<f64>; 3],
    shock: [Vec<f64>; 3],
}

impl Sums {
    fn zeros(len: usize) -> Self {
        let z = || [vec![0.0; len], vec![0.0; len], vec![0.0; len]];
        Self {
            base: z(),
            shock: z(),
        }
    }

    fn add(mut self, other: &Sums) -> Self {
        for k in 0..3 {
            for (a, b) in self.base[k].iter_mut().zip(&other.base[k]) {
                *a += b;
            }
            for (a, b) in self.shock[k].iter_mut().zip(&other.shock[k]) {
                *a += b;
            }
        }
        self
    }
}

/// Pairwise reduction in a fixed order, independent of thread scheduling.
fn pairwise(mut parts: Vec<Sums>) -> Sums {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            next.push(match it.next() {
                Some(b) => a.add(&b),
                None => a,
            });
        }
        parts = next;
    }
    parts.pop().expect("at least one chunk")
}

fn volatility(sol: &EquilibriumSolution, economy: &Economy, x: f64, j: usize) -> f64 {
    let (m1, m2) = conditional_price_moments(sol, economy, x, j);
    (m2 - m1 * m1).max(0.0).sqrt()
}

/// Smallest positive gap between distinct values of one state coordinate.
fn grid_step(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

/// Maps states of an economy after a rate impulse.
#[derive(Debug, Clone)]
pub struct ShockProjector {
    target: Vec<usize>,
}

impl ShockProjector {
    pub fn new(economy: &Economy, shock_bp: f64) -> Self {
        let dr = shock_bp / 1e4;
        let da = -economy.gamma * dr;
        let sr = grid_step(&economy.rate_annual);
        let sa = grid_step(&economy.activity);
        let n = economy.n_states();
        let target = (0..n)
            .map(|j| {
                if shock_bp == 0.0 {
                    return j;
                }
                let r = economy.rate_annual[j] + dr;
                let a = economy.activity[j] + da;
                let dist = |k: usize| {
                    let mut d = ((economy.rate_annual[k] - r) / sr).powi(2);
                    if sa.is_finite() {
                        d += ((economy.activity[k] - a) / sa).powi(2);
                    }
                    d
                };
                (0..n)
                    .fold((0, f64::INFINITY), |best, k| {
                        let d = dist(k);
                        if d < best.1 {
                            (k, d)
                        } else {
                            best
                        }
                    })
                    .0
            })
            .collect();
        Self { target }
    }

    pub fn apply(&self, j: usize) -> usize {
        self.target[j]
    }
}

/// Linear-interpolation percentile of a sample (`p` in `[0, 100]`).
pub fn percentile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * (p / 100.0).clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

fn nearest_rate_state(economy: &Economy, sample: Option<&SimulationResult>, r: f64) -> usize {
    let n = economy.n_states();
    let mut best = (0, f64::INFINITY);
    for k in 0..n {
        let d = (economy.rate_annual[k] - r).abs();
        if d < best.1 {
            best = (k, d);
        }
    }
    let r_node = economy.rate_annual[best.0];
    // With an activity coordinate, pick the node at this rate closest to the
    // sample mean of activity given the rate.
    let same: Vec<usize> = (0..n).filter(|&k| economy.rate_annual[k] == r_node).collect();
    if same.len() == 1 {
        return same[0];
    }
    let (sum, cnt) = sample.map_or((0.0, 0), |s| {
        s.rate_annual
            .iter()
            .zip(&s.activity)
            .filter(|(r, _)| **r == r_node)
            .fold((0.0, 0usize), |(s, c), (_, a)| (s + a, c + 1))
    });
    let a_target = if cnt > 0 { sum / cnt as f64 } else { 0.0 };
    same.into_iter()
        .fold((0, f64::INFINITY), |b, k| {
            let d = (economy.activity[k] - a_target).abs();
            if d < b.1 {
                (k, d)
            } else {
                b
            }
        })
        .0
}

/// Availability and exogenous state at the given percentiles of a stationary
/// sample. The state is the chain node nearest the rate percentile (ties to
/// the lower index).
pub fn percentile_state(
    economy: &Economy,
    sample: &SimulationResult,
    p_x: f64,
    p_r: f64,
) -> Result<(f64, usize)> {
    if !(0.0..=100.0).contains(&p_x) || !(0.0..=100.0).contains(&p_r) {
        return Err(Error::param("percentile", "must lie in [0, 100]"));
    }
    if sample.is_empty() {
        return Err(Error::param("sample", "empty stationary sample"));
    }
    let x0 = percentile(&sample.x, p_x);
    let r = percentile(&sample.rate_annual, p_r);
    Ok((x0, nearest_rate_state(economy, Some(sample), r)))
}

fn need(s: Option<&SimulationResult>) -> Result<&SimulationResult> {
    s.ok_or_else(|| Error::param("conditioning", "needs a stationary sample"))
}

fn resolve(
    economy: &Economy,
    sample: Option<&SimulationResult>,
    x0: Conditioning,
    z0: Conditioning,
) -> Result<(f64, usize)> {
    let x = match x0 {
        Conditioning::Mean => {
            let s = need(sample)?;
            s.x.iter().sum::<f64>() / s.len() as f64
        }
        Conditioning::Percentile(p) => percentile(&need(sample)?.x, p),
        Conditioning::Value(v) => v,
        Conditioning::State(_) => return Err(Error::param("x0", "availability cannot be a state index")),
    };
    let z = match z0 {
        Conditioning::State(j) => j,
        Conditioning::Value(r) => nearest_rate_state(economy, sample, r),
        Conditioning::Mean => {
            let s = need(sample)?;
            nearest_rate_state(
                economy,
                Some(s),
                s.rate_annual.iter().sum::<f64>() / s.len() as f64,
            )
        }
        Conditioning::Percentile(p) => {
            let s = need(sample)?;
            nearest_rate_state(economy, Some(s), percentile(&s.rate_annual, p))
        }
    };
    if z >= economy.n_states() {
        return Err(Error::InvalidState {
            state: z,
            reason: "conditioning state outside the chain".into(),
        });
    }
    if !(x >= economy.b) || !x.is_finite() {
        return Err(Error::BelowLowerBound { x, b: economy.b });
    }
    Ok((x, z))
}

/// Generalized impulse response to a rate impulse of `shock_bp` basis points.
pub fn girf(sol: &EquilibriumSolution, economy: &Economy, gspec: &GirfSpec) -> Result<GirfResult> {
    if gspec.horizon < 1 || gspec.n_paths < 1 {
        return Err(Error::param(
            "girf",
            "horizon and number of paths must be at least 1",
        ));
    }
    let needs_sample = [gspec.x0, gspec.z0]
        .iter()
        .any(|c| matches!(c, Conditioning::Mean | Conditioning::Percentile(_)));
    let sample = if needs_sample {
        Some(stationary_sample(sol, economy, gspec.seed)?)
    } else {
        None
    };
    let (x0, z0) = resolve(economy, sample.as_ref(), gspec.x0, gspec.z0)?;
    girf_at(sol, economy, x0, z0, gspec)
}

/// Generalized impulse response from a fixed `(x0, z0)`.
pub fn girf_at(
    sol: &EquilibriumSolution,
    economy: &Economy,
    x0: f64,
    z0: usize,
    gspec: &GirfSpec,
) -> Result<GirfResult> {
    if z0 >= economy.n_states() {
        return Err(Error::InvalidState {
            state: z0,
            reason: "conditioning state outside the chain".into(),
        });
    }
    if !(x0 >= economy.b) {
        return Err(Error::BelowLowerBound { x: x0, b: economy.b });
    }
    let h_len = gspec.horizon + 1;
    let sampler = Sampler::new(economy);
    let proj = ShockProjector::new(economy, gspec.shock_bp);
    let disc = (-economy.delta).exp();
    let vol = gspec.volatility;

    let run_chunk = |c: usize| -> Sums {
        let mut sums = Sums::zeros(h_len);
        let start = c * CHUNK;
        let end = (start + CHUNK).min(gspec.n_paths);
        for path in start..end {
            // Stream 0 is reserved for the stationary sample.
            let mut draws = DrawStream::new(gspec.seed, path as u64 + 1);
            let (mut xb, mut zb) = (x0, z0);
            let (mut xs, mut zs) = (x0, z0);
            for h in 0..h_len {
                let (u1, u2) = draws.at(h as u64);
                let eta = sampler.eta(u2);
                let ib = sol.storage_unchecked(xb, zb);
                let is = sol.storage_unchecked(xs, zs);
                let nb = sampler.next_state(zb, u1);
                let ns = if h == 0 {
                    proj.apply(nb)
                } else {
                    sampler.next_state(zs, u1)
                };
                xb = disc * ib + economy.y(nb, eta);
                xs = disc * is + economy.y(ns, eta);
                zb = nb;
                zs = ns;
                sums.base[0][h] += sol.price_unchecked(xb, zb);
                sums.shock[0][h] += sol.price_unchecked(xs, zs);
                sums.base[1][h] += sol.storage_unchecked(xb, zb);
                sums.shock[1][h] += sol.storage_unchecked(xs, zs);
                if vol {
                    sums.base[2][h] += volatility(sol, economy, xb, zb);
                    sums.shock[2][h] += volatility(sol, economy, xs, zs);
                }
            }
        }
        sums
    };
    let n_chunks = gspec.n_paths.div_ceil(CHUNK);
    let parts: Vec<Sums> = (0..n_chunks).into_par_iter().map(run_chunk).collect();
    let sums = pairwise(parts);
    Ok(GirfResult::from_sums(
        &sums,
        gspec.n_paths,
        (x0, z0, gspec.shock_bp, gspec.seed),
        vol,
    ))
}

/// Settings of the constant-rate MIT experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MitSpec {
    /// Net per-period rates before and during the shock.
    pub r_low: f64,
    pub r_high: f64,
    pub horizon: usize,
    pub n_paths: usize,
    pub seed: u64,
    /// Starting availability; the stationary mean of the low-rate economy if
    /// absent.
    pub x0: Option<f64>,
}

impl Default for MitSpec {
    fn default() -> Self {
        Self {
            r_low: 0.0015,
            r_high: 0.004,
            horizon: 16,
            n_paths: 10_000,
            seed: 1,
            x0: None,
        }
    }
}

/// Outcome of the MIT experiment. Economy 1 stays at the low rate; economy 2
/// faces the high rate for one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MitResult {
    /// `shocked` is economy 2, `baseline` economy 1.
    pub irf: GirfResult,
    /// Paths with `P1 < P2` at impact, beyond rounding.
    pub impact_violations: usize,
    /// Path-horizon pairs with `P1 > P2` after impact, beyond rounding.
    pub later_violations: usize,
    /// Largest violation of either ordering.
    pub worst_violation: f64,
}

/// Responses to a one-period unanticipated rise of a constant rate.
///
/// Both pricing rules are one operator application away from the same
/// converged low-rate rule `f`: economy 1 prices with `T_low f`, economy 2
/// with `T_high f` at impact and `T_low f` afterwards.
pub fn mit_irf(spec: &ModelSpec, mspec: &MitSpec) -> Result<MitResult> {
    if !(mspec.r_high >= mspec.r_low) {
        return Err(Error::param("r_high", "must be at least r_low"));
    }
    if mspec.horizon < 1 || mspec.n_paths < 1 {
        return Err(Error::param(
            "mit",
            "horizon and number of paths must be at least 1",
        ));
    }
    let opts = SolverOptions::from_spec(spec)?;
    let eco_low = constant_rate_economy(spec, mspec.r_low)?;
    let eco_high = constant_rate_economy(spec, mspec.r_high)?;
    let base = solve_egm(&eco_low, &opts)?;
    let f_low = mit_operator_step(&base, &eco_low, &opts)?;
    let f_high = mit_operator_step(&base, &eco_high, &opts)?;

    let x0 = match mspec.x0 {
        Some(x) => x,
        None => {
            let s = simulate_from(
                &f_low,
                &eco_low,
                eco_low.eta_law.0,
                0,
                60_000,
                10_000,
                mspec.seed,
                0,
            )?;
            s.x.iter().sum::<f64>() / s.len() as f64
        }
    };
    if !(x0 >= eco_low.b) {
        return Err(Error::BelowLowerBound { x: x0, b: eco_low.b });
    }
    let h_len = mspec.horizon + 1;
    let sampler = Sampler::new(&eco_low);
    let disc = (-eco_low.delta).exp();
    let tol = 1e-12;

    struct Acc {
        sums: Sums,
        impact: usize,
        later: usize,
        worst: f64,
    }
    let run_chunk = |c: usize| -> Acc {
        let mut acc = Acc {
            sums: Sums::zeros(h_len),
            impact: 0,
            later: 0,
            worst: 0.0,
        };
        let start = c * CHUNK;
        let end = (start + CHUNK).min(mspec.n_paths);
        for path in start..end {
            let mut draws = DrawStream::new(mspec.seed, path as u64 + 1);
            let (mut x1, mut x2) = (x0, x0);
            for h in 0..h_len {
                let (p1, i1) = (f_low.price_unchecked(x1, 0), f_low.storage_unchecked(x1, 0));
                let (p2, i2) = if h == 0 {
                    (f_high.price_unchecked(x2, 0), f_high.storage_unchecked(x2, 0))
                } else {
                    (f_low.price_unchecked(x2, 0), f_low.storage_unchecked(x2, 0))
                };
                let gap = if h == 0 { p2 - p1 } else { p1 - p2 };
                if gap > tol {
                    if h == 0 {
                        acc.impact += 1;
                    } else {
                        acc.later += 1;
                    }
                }
                acc.worst = acc.worst.max(gap);
                acc.sums.base[0][h] += p1;
                acc.sums.shock[0][h] += p2;
                acc.sums.base[1][h] += i1;
                acc.sums.shock[1][h] += i2;
                let (_, u2) = draws.at(h as u64 + 1);
                let y = eco_low.y(0, sampler.eta(u2));
                x1 = disc * i1 + y;
                x2 = disc * i2 + y;
            }
        }
        acc
    };
    let n_chunks = mspec.n_paths.div_ceil(CHUNK);
    let parts: Vec<Acc> = (0..n_chunks).into_par_iter().map(run_chunk).collect();
    let impact = parts.iter().map(|a| a.impact).sum();
    let later = parts.iter().map(|a| a.later).sum();
    let worst = parts.iter().map(|a| a.worst).fold(0.0, f64::max);
    let sums = pairwise(parts.into_iter().map(|a| a.sums).collect());
    let bp = (mspec.r_high - mspec.r_low) * 1e4;
    Ok(MitResult {
        irf: GirfResult::from_sums(&sums, mspec.n_paths, (x0, 0, bp, mspec.seed), false),
        impact_violations: impact,
        later_violations: later,
        worst_violation: worst,
    })
}
