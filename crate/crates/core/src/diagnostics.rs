//! Accuracy measures and executable versions of the structural properties of
//! the equilibrium rules.

use crate::error::{Error, Result};
use crate::model::{build_economy, ChainKind, Economy, ModelSpec};
use crate::process::MarkovChain;
use crate::simulation::{simulate, EULER_BURN, EULER_T};
use crate::solver::{solve_egm, EquilibriumSolution, SolverOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// One evaluated Euler error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerSample {
    pub x: f64,
    pub z: usize,
    pub ee: f64,
    /// The same error scaled by total demand `p^{-1}(f)` instead of demand
    /// above `b`.
    pub ee_level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulerErrorReport {
    pub samples: Vec<EulerSample>,
    pub max_log10: f64,
    pub pct95_log10: f64,
    pub max_log10_level: f64,
    pub pct95_log10_level: f64,
}

fn log_summary(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let logs: Vec<f64> = values.map(|v| v.abs().log10()).collect();
    if logs.is_empty() {
        return (f64::NEG_INFINITY, f64::NEG_INFINITY);
    }
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (max, crate::girf::percentile(&logs, 95.0))
}

impl EulerErrorReport {
    fn from_samples(samples: Vec<EulerSample>) -> Self {
        let (max_log10, pct95_log10) = log_summary(samples.iter().map(|s| s.ee));
        let (max_log10_level, pct95_log10_level) = log_summary(samples.iter().map(|s| s.ee_level));
        Self {
            samples,
            max_log10,
            pct95_log10,
            max_log10_level,
            pct95_log10_level,
        }
    }
}

/// `E_z[M' f(X', Z')]` for next-period availability `carry + y(Z', eta)`.
fn discounted_continuation(sol: &EquilibriumSolution, economy: &Economy, carry: f64, j: usize) -> f64 {
    let mut acc = 0.0;
    for (m, &phi) in economy.chain.row(j).iter().enumerate() {
        if phi == 0.0 {
            continue;
        }
        let ev = economy
            .eta
            .expect(|eta| sol.price_unchecked(carry + economy.y(m, eta), m));
        acc += phi * economy.m_per_state[m] * ev;
    }
    acc
}

fn euler_one(sol: &EquilibriumSolution, economy: &Economy, x: f64, j: usize) -> Result<(f64, f64)> {
    let demand = &economy.demand;
    let disc = (-economy.delta).exp();
    let price = sol.price_unchecked(x, j);
    let d2 = demand.p_inv(price) - economy.b;
    if !(d2 > 0.0) {
        return Err(Error::Degenerate(format!(
            "demand at x = {x}, state {j} does not exceed the lower bound"
        )));
    }
    let carry = disc * sol.storage_unchecked(x, j);
    let cont = disc * discounted_continuation(sol, economy, carry, j) - economy.k;
    let implied = cont.max(demand.p(x)).min(economy.p_of_b());
    let d1 = demand.p_inv(implied) - economy.b;
    let ee = 1.0 - d1 / d2;
    Ok((ee, ee * d2 / (d2 + economy.b)))
}

/// Euler-equation errors at the given states, in relative demand units.
pub fn euler_error(
    sol: &EquilibriumSolution,
    economy: &Economy,
    states: &[(f64, usize)],
) -> Result<EulerErrorReport> {
    for &(x, j) in states {
        if j >= economy.n_states() {
            return Err(Error::InvalidState {
                state: j,
                reason: "outside the chain".into(),
            });
        }
        if !(x >= economy.b) {
            return Err(Error::BelowLowerBound { x, b: economy.b });
        }
    }
    let samples = states
        .par_iter()
        .map(|&(x, z)| euler_one(sol, economy, x, z).map(|(ee, ee_level)| EulerSample { x, z, ee, ee_level }))
        .collect::<Result<Vec<_>>>()?;
    Ok(EulerErrorReport::from_samples(samples))
}

/// Euler errors along a simulated path of `EULER_T` periods after discarding
/// `EULER_BURN`.
pub fn euler_error_sampled(
    sol: &EquilibriumSolution,
    economy: &Economy,
    seed: u64,
) -> Result<EulerErrorReport> {
    let path = simulate(sol, economy, EULER_T, EULER_BURN, seed)?;
    let states: Vec<(f64, usize)> = path.x.iter().copied().zip(path.z_index.iter().copied()).collect();
    euler_error(sol, economy, &states)
}

/// Outcome of one property check over a set of evaluation points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub name: String,
    pub passed: bool,
    /// Largest violation found (0 when none).
    pub worst: f64,
    /// Number of evaluations.
    pub count: usize,
    /// Number of evaluations that violated the property.
    pub violations: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub checks: Vec<PropertyCheck>,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&PropertyCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn extend(&mut self, other: PropertyReport) {
        self.checks.extend(other.checks);
    }
}

/// Accumulates violations `v > tol` for one named property.
#[derive(Debug, Clone)]
struct Tally {
    name: &'static str,
    tol: f64,
    worst: f64,
    count: usize,
    violations: usize,
}

impl Tally {
    fn new(name: &'static str, tol: f64) -> Self {
        Self {
            name,
            tol,
            worst: 0.0,
            count: 0,
            violations: 0,
        }
    }

    /// Records a violation magnitude (positive means violated).
    fn record(&mut self, v: f64) {
        self.count += 1;
        if v > self.tol || v.is_nan() {
            self.violations += 1;
        }
        if v > self.worst || v.is_nan() {
            self.worst = v;
        }
    }

    fn finish(self) -> PropertyCheck {
        PropertyCheck {
            name: self.name.into(),
            passed: self.violations == 0,
            worst: self.worst,
            count: self.count,
            violations: self.violations,
        }
    }
}

/// Evaluation mesh for property checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshSpec {
    /// Uniform points per state between `b` and the upper end.
    pub n_points: usize,
    /// Absolute tolerance on equalities and weak orderings.
    pub tol: f64,
}

impl Default for MeshSpec {
    fn default() -> Self {
        Self {
            n_points: 400,
            tol: 1e-6,
        }
    }
}

/// Uniform mesh from `b` past the disposal threshold (or past the last
/// availability node), merged with the availability nodes.
fn state_mesh(sol: &EquilibriumSolution, j: usize, n: usize) -> Vec<f64> {
    let last = *sol.x[j].last().expect("nonempty column");
    let hi = if sol.xstar[j].is_finite() {
        sol.xstar[j] * 1.05 + 0.05
    } else {
        last * 1.2
    };
    let n = n.max(2);
    let mut mesh: Vec<f64> = (0..n)
        .map(|i| sol.b + (hi - sol.b) * i as f64 / (n - 1) as f64)
        .chain(sol.x[j].iter().copied().filter(|&x| x >= sol.b))
        .collect();
    mesh.sort_by(f64::total_cmp);
    mesh.dedup();
    mesh
}

/// Regime structure and monotonicity of the pricing rule, and the matching
/// properties of the storage rule, on a mesh of each state.
pub fn check_regimes(sol: &EquilibriumSolution, economy: &Economy, mesh: &MeshSpec) -> PropertyReport {
    let tol = mesh.tol;
    let demand = &economy.demand;
    let disc = (-economy.delta).exp();
    let mut consumption = Tally::new("price equals p(x) below the storage threshold", tol);
    let mut storage = Tally::new("price above max(p(x), 0) between the thresholds", tol);
    let mut disposal = Tally::new("price zero beyond the disposal threshold", tol);
    let mut decreasing = Tally::new("price nonincreasing in availability", tol);
    let mut strict = Tally::new("price strictly decreasing where positive", 0.0);
    let mut i_zero = Tally::new("storage zero below the storage threshold", tol);
    let mut i_mid = Tally::new("storage strictly inside its bounds between the thresholds", tol);
    let mut i_cap = Tally::new("storage at its cap beyond the disposal threshold", tol);
    let mut i_incr = Tally::new("storage nondecreasing in availability", tol);
    let mut clearing = Tally::new("market clearing x = demand + storage", 1e-9);

    for j in 0..sol.n_states() {
        let threshold = demand.p_inv(sol.pbar_threshold[j]);
        let xstar = sol.xstar[j];
        let cap = if xstar.is_finite() {
            xstar - demand.satiation()
        } else {
            f64::INFINITY
        };
        let strict_applies = disc
            * economy
                .chain
                .row(j)
                .iter()
                .zip(&economy.m_per_state)
                .map(|(p, m)| p * m)
                .sum::<f64>()
            < 1.0;
        let pts = state_mesh(sol, j, mesh.n_points);
        let mut prev: Option<(f64, f64)> = None;
        for &x in &pts {
            let f = sol.price_unchecked(x, j);
            let i = sol.storage_unchecked(x, j);
            let px = demand.p(x);
            if x <= threshold {
                consumption.record((f - px.min(economy.p_of_b())).abs());
                i_zero.record(i.abs());
            } else if x < xstar {
                storage.record(px.max(0.0) - f);
                i_mid.record((-i).max(i - cap));
            } else {
                disposal.record(f.abs());
                i_cap.record((i - cap).abs());
            }
            if x < xstar {
                clearing.record((x - demand.p_inv(f) - i).abs());
            }
            if let Some((fp, ip)) = prev {
                decreasing.record(f - fp);
                i_incr.record(ip - i);
                if fp > 0.0 && f > 0.0 && strict_applies {
                    strict.record(if f < fp { 0.0 } else { f - fp + f64::MIN_POSITIVE });
                }
            }
            prev = Some((f, i));
        }
    }
    PropertyReport {
        checks: vec![
            consumption.finish(),
            storage.finish(),
            disposal.finish(),
            decreasing.finish(),
            strict.finish(),
            i_zero.finish(),
            i_mid.finish(),
            i_cap.finish(),
            i_incr.finish(),
            clearing.finish(),
        ],
    }
}

/// Orders of pricing, storage and threshold across exogenous states, which
/// must be sorted so that rates and output are nondecreasing in the index.
/// Availability is restricted to the range covered by the solved nodes.
pub fn check_state_monotonicity(
    sol: &EquilibriumSolution,
    economy: &Economy,
    mesh: &MeshSpec,
) -> PropertyReport {
    let tol = mesh.tol;
    let mut price = Tally::new("price nonincreasing in the exogenous state", tol);
    let mut inventory = Tally::new("storage nonincreasing in the exogenous state", tol);
    let mut pbar = Tally::new("storage threshold nonincreasing in the exogenous state", tol);
    let n = sol.n_states();
    for j in 1..n {
        pbar.record(sol.pbar_threshold[j] - sol.pbar_threshold[j - 1]);
        // Compare only where both rules are interpolated, not extrapolated.
        let top = sol.x[j].last().unwrap().min(*sol.x[j - 1].last().unwrap());
        let pts = state_mesh(sol, j, mesh.n_points);
        for &x in pts.iter().filter(|&&x| x <= top) {
            price.record(sol.price_unchecked(x, j) - sol.price_unchecked(x, j - 1));
            inventory.record(sol.storage_unchecked(x, j) - sol.storage_unchecked(x, j - 1));
        }
    }
    let _ = economy;
    PropertyReport {
        checks: vec![price.finish(), inventory.finish(), pbar.finish()],
    }
}

/// Midpoint convexity of the pricing rule in availability (linear demand).
pub fn check_convexity(
    sol: &EquilibriumSolution,
    economy: &Economy,
    n_pairs: usize,
    slack: f64,
    seed: u64,
) -> Result<PropertyReport> {
    if !economy.demand.is_linear() {
        return Err(Error::param("demand", "convexity applies to linear demand"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::new("price midpoint convex in availability", slack);
    for _ in 0..n_pairs {
        let j = rng.random_range(0..sol.n_states());
        let hi = if sol.xstar[j].is_finite() {
            sol.xstar[j] * 1.1
        } else {
            *sol.x[j].last().unwrap()
        };
        let x1 = rng.random_range(sol.b..hi);
        let x2 = rng.random_range(sol.b..hi);
        let fm = sol.price_unchecked(0.5 * (x1 + x2), j);
        let avg = 0.5 * (sol.price_unchecked(x1, j) + sol.price_unchecked(x2, j));
        t.record(fm - avg);
    }
    Ok(PropertyReport {
        checks: vec![t.finish()],
    })
}

/// `Cov(P', R')` conditional on `(x, z_j)`, where `R'` is next period's gross
/// rate, by exact summation over next states and output nodes.
pub fn conditional_covariance(sol: &EquilibriumSolution, economy: &Economy, x: f64, j: usize) -> f64 {
    let disc = (-economy.delta).exp();
    let carry = disc * sol.storage_unchecked(x, j);
    let (mut ep, mut er, mut epr) = (0.0, 0.0, 0.0);
    for (m, &phi) in economy.chain.row(j).iter().enumerate() {
        if phi == 0.0 {
            continue;
        }
        let r = 1.0 / economy.m_per_state[m];
        let p = economy
            .eta
            .expect(|eta| sol.price_unchecked(carry + economy.y(m, eta), m));
        ep += phi * p;
        er += phi * r;
        epr += phi * p * r;
    }
    epr - ep * er
}

/// Checks `Cov(P', R') <= 1e-9` at `n_states` states spread evenly along a
/// simulated path.
pub fn check_negative_covariance(
    sol: &EquilibriumSolution,
    economy: &Economy,
    n_states: usize,
    seed: u64,
) -> Result<PropertyReport> {
    if n_states == 0 {
        return Err(Error::param("n_states", "must be positive"));
    }
    let path = simulate(sol, economy, EULER_T, EULER_BURN, seed)?;
    let step = (path.len() / n_states).max(1);
    let mut t = Tally::new("conditional covariance of price and rate nonpositive", 1e-9);
    for s in (0..path.len()).step_by(step).take(n_states) {
        t.record(conditional_covariance(sol, economy, path.x[s], path.z_index[s]));
    }
    Ok(PropertyReport {
        checks: vec![t.finish()],
    })
}

/// Same-period and next-period price orderings along constructed pairs of
/// histories. States must be sorted by rate with output nondecreasing in the
/// index. The over-time ordering needs a degenerate output draw and is
/// skipped otherwise.
pub fn check_causal_ordering(
    sol: &EquilibriumSolution,
    economy: &Economy,
    n_pairs: usize,
    seed: u64,
) -> PropertyReport {
    let n = economy.n_states();
    let disc = (-economy.delta).exp();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut same = Tally::new("higher current rate from a dominated history lowers price", 1e-9);
    let mut later = Tally::new(
        "rate rise after a fall with growing availability lowers next price",
        1e-9,
    );
    let rows = economy.chain.sparse_rows();
    let hi_x = |j: usize| {
        sol.x[j]
            .last()
            .copied()
            .unwrap_or(sol.b)
            .min(if sol.xstar[j].is_finite() {
                sol.xstar[j]
            } else {
                f64::INFINITY
            })
    };
    let eta_nodes = economy.eta.nodes();

    for _ in 0..n_pairs {
        // Economy 1 starts with more stocks and a lower rate, then faces the
        // higher rate.
        let j1 = rng.random_range(0..n);
        let j2 = rng.random_range(j1..n);
        let x1 = rng.random_range(sol.b..=hi_x(j1).max(sol.b));
        let x2 = rng.random_range(sol.b..=x1);
        let (r1, r2) = (rows.row(j1), rows.row(j2));
        let k1 = r1[rng.random_range(0..r1.len())].0;
        let cands: Vec<usize> = r2.iter().map(|e| e.0).filter(|&k| k <= k1).collect();
        if cands.is_empty() {
            continue;
        }
        let k2 = cands[rng.random_range(0..cands.len())];
        let eta = eta_nodes[rng.random_range(0..eta_nodes.len())];
        let xt1 = disc * sol.storage_unchecked(x1, j1) + economy.y(k1, eta);
        let xt2 = disc * sol.storage_unchecked(x2, j2) + economy.y(k2, eta);
        same.record(sol.price_unchecked(xt1, k1) - sol.price_unchecked(xt2, k2));
    }

    if economy.eta.len() == 1 {
        let eta = eta_nodes[0];
        let mut tries = 0;
        while later.count < n_pairs && tries < 200 * n_pairs {
            tries += 1;
            let j0 = rng.random_range(0..n);
            // Rising availability needs small stocks, so favour low x.
            let u: f64 = rng.random();
            let x0 = sol.b + (hi_x(j0) - sol.b).max(0.0) * u.powi(4);
            let down: Vec<usize> = rows.row(j0).iter().map(|e| e.0).filter(|&k| k <= j0).collect();
            if down.is_empty() {
                continue;
            }
            let j1 = down[rng.random_range(0..down.len())];
            let x1 = disc * sol.storage_unchecked(x0, j0) + economy.y(j1, eta);
            if x1 < x0 {
                continue;
            }
            let up: Vec<usize> = rows.row(j1).iter().map(|e| e.0).filter(|&k| k >= j1).collect();
            if up.is_empty() {
                continue;
            }
            let j2 = up[rng.random_range(0..up.len())];
            let x2 = disc * sol.storage_unchecked(x1, j1) + economy.y(j2, eta);
            later.record(sol.price_unchecked(x2, j2) - sol.price_unchecked(x1, j1));
        }
    }
    let mut checks = vec![same.finish()];
    if later.count > 0 {
        checks.push(later.finish());
    }
    PropertyReport { checks }
}

/// Pointwise dominance `f_high <= f_low` between two constant-rate economies
/// solved with the same number of operator applications.
pub fn check_rate_dominance(
    spec: &ModelSpec,
    r_high: f64,
    r_low: f64,
    mesh: &MeshSpec,
) -> Result<PropertyReport> {
    if !(r_high >= r_low) {
        return Err(Error::param("r_high", "must be at least r_low"));
    }
    let eco_h = crate::solver::constant_rate_economy(spec, r_high)?;
    let eco_l = crate::solver::constant_rate_economy(spec, r_low)?;
    let mut opts = SolverOptions::from_spec(spec)?;
    // The higher rate converges no slower; fix a common count.
    let probe = solve_egm(&eco_l, &opts)?;
    opts.min_iters = probe.iterations;
    opts.max_iters = opts.max_iters.max(probe.iterations);
    let sol_h = solve_egm(&eco_h, &opts)?;
    let mut opts_l = opts.clone();
    opts_l.min_iters = sol_h.iterations;
    let sol_l = solve_egm(&eco_l, &opts_l)?;
    if sol_l.iterations != sol_h.iterations {
        return Err(Error::Degenerate(
            "dominance check needs equal iteration counts".into(),
        ));
    }
    let mut t = Tally::new("higher constant rate gives a lower pricing rule", mesh.tol);
    let b = eco_h.b.max(eco_l.b);
    let hi = sol_l.x[0].last().copied().unwrap_or(b);
    let n = mesh.n_points.max(2);
    for i in 0..n {
        let x = b + (hi - b) * i as f64 / (n - 1) as f64;
        t.record(sol_h.price_unchecked(x, 0) - sol_l.price_unchecked(x, 0));
    }
    Ok(PropertyReport {
        checks: vec![t.finish()],
    })
}

/// All structural checks that apply to a solved economy with rates and
/// output nondecreasing in the state index.
pub fn check_all(
    sol: &EquilibriumSolution,
    economy: &Economy,
    mesh: &MeshSpec,
    seed: u64,
) -> Result<PropertyReport> {
    let mut report = check_regimes(sol, economy, mesh);
    report.extend(check_state_monotonicity(sol, economy, mesh));
    if economy.demand.is_linear() {
        report.extend(check_convexity(sol, economy, 2000, 1e-8, seed)?);
    }
    report.extend(check_negative_covariance(sol, economy, 200, seed)?);
    report.extend(check_causal_ordering(sol, economy, 2000, seed));
    Ok(report)
}

/// Iid three-state economy with correlated rate and output: a low rate with
/// output `y[0]` (probability 1/2), or a high rate with output `y[1]`
/// (probability `phi / 2`) or `y[2]` (probability `(1 - phi) / 2`).
pub fn correlated_two_rate_spec(
    base: &ModelSpec,
    y: [f64; 3],
    phi: f64,
    rates: (f64, f64),
) -> Result<ModelSpec> {
    if !(0.0..=1.0).contains(&phi) {
        return Err(Error::param("phi", "must lie in [0, 1]"));
    }
    let (r_lo, r_hi) = rates;
    let mean = base.output_mean();
    let chain = MarkovChain::iid(
        vec![vec![r_lo, y[0]], vec![r_hi, y[1]], vec![r_hi, y[2]]],
        &[0.5, 0.5 * phi, 0.5 * (1.0 - phi)],
    )?;
    let mut spec = base.clone();
    spec.sigma_y = 0.0;
    spec.output_mean = Some(mean);
    spec.activity.alpha = 0.0;
    spec.chain = ChainKind::Explicit {
        chain,
        discount: vec![1.0 / r_lo, 1.0 / r_hi, 1.0 / r_hi],
        output_shift: y.iter().map(|v| v - mean).collect(),
    };
    Ok(spec)
}

/// Rate-only economy whose output is deterministic and rises with the rate:
/// `y(z) = mean + slope (R^a(z) - mu_R)`.
pub fn rate_linked_output_spec(base: &ModelSpec, slope: f64) -> Result<ModelSpec> {
    if !(slope >= 0.0) {
        return Err(Error::param("slope", "output must be nondecreasing in the rate"));
    }
    let r = &base.rate;
    let n = &base.numerics;
    let chain = crate::process::tauchen_ar1(
        r.mu_r,
        r.rho_r,
        r.sigma_r * (1.0 - r.rho_r * r.rho_r).sqrt(),
        n.n_rate_states,
        n.coverage,
    )?;
    let rates = chain.coordinate(0);
    let mut spec = base.clone();
    spec.sigma_y = 0.0;
    spec.activity.alpha = 0.0;
    spec.chain = ChainKind::Explicit {
        chain,
        discount: rates.iter().map(|ra| ra.powf(-0.25)).collect(),
        output_shift: rates.iter().map(|ra| slope * (ra - r.mu_r)).collect(),
    };
    Ok(spec)
}

/// One point of the scan over the high-rate output probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceScanRow {
    pub phi: f64,
    /// `p^{-1}` of the storage threshold.
    pub threshold: f64,
    /// `y[1] < threshold < y[0] < y[2]`.
    pub ordering_ok: bool,
    pub cov_rate_output: f64,
    /// Conditional covariance of price and rate after a stock-out.
    pub cov_rate_price: f64,
}

impl CovarianceScanRow {
    pub fn both_positive(&self) -> bool {
        self.ordering_ok && self.cov_rate_output > 0.0 && self.cov_rate_price > 0.0
    }
}

/// Solves the correlated three-state economy for each `phi` and reports the
/// output and price covariances with the rate.
pub fn scan_correlated(
    base: &ModelSpec,
    y: [f64; 3],
    rates: (f64, f64),
    phis: &[f64],
) -> Result<Vec<CovarianceScanRow>> {
    phis.iter()
        .map(|&phi| {
            let spec = correlated_two_rate_spec(base, y, phi, rates)?;
            let economy = build_economy(&spec)?;
            let sol = solve_egm(&economy, &SolverOptions::from_spec(&spec)?)?;
            let threshold = economy.demand.p_inv(sol.pbar_threshold[0]);
            let probs = [0.5, 0.5 * phi, 0.5 * (1.0 - phi)];
            let er: f64 = probs.iter().zip(&economy.m_per_state).map(|(p, m)| p / m).sum();
            let ey: f64 = probs.iter().zip(&y).map(|(p, v)| p * v).sum();
            let ery: f64 = probs
                .iter()
                .zip(&economy.m_per_state)
                .zip(&y)
                .map(|((p, m), v)| p * v / m)
                .sum();
            Ok(CovarianceScanRow {
                phi,
                threshold,
                ordering_ok: y[1] < threshold && threshold < y[0] && y[0] < y[2],
                cov_rate_output: ery - er * ey,
                cov_rate_price: conditional_covariance(&sol, &economy, economy.b, 0),
            })
        })
        .collect()
}
