//! Endogenous grid solution of the equilibrium pricing rule.

use crate::error::{Error, Result};
use crate::model::{build_economy, validate, ChainKind, DemandCurve, Economy, ModelSpec, Numerics};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Grid of end-of-period storage levels, starting at exactly zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorageGrid {
    points: Vec<f64>,
}

impl StorageGrid {
    /// `K` points `I(u) = a (e^{c u} - 1)` on `u in [0, 1]`, with `I(1) = max`
    /// and `I(1/2) = median`. Reduces to an even grid when `median = max / 2`.
    pub fn exponential(k: usize, max: f64, median: f64) -> Result<Self> {
        if k < 2 {
            return Err(Error::param("n_storage_grid", "need at least two nodes"));
        }
        if !(max > 0.0 && median > 0.0 && median < max) {
            return Err(Error::param("storage_grid_median", "need 0 < median < max"));
        }
        let q = max / median - 1.0;
        let last = (k - 1) as f64;
        let points = if (q - 1.0).abs() < 1e-12 {
            (0..k).map(|s| max * s as f64 / last).collect()
        } else {
            let a = median / (q - 1.0);
            let c = 2.0 * q.ln();
            let mut v: Vec<f64> = (0..k).map(|s| a * ((c * s as f64 / last).exp() - 1.0)).collect();
            v[0] = 0.0;
            v[k - 1] = max;
            if k % 2 == 1 {
                v[k / 2] = median;
            }
            v
        };
        Self::from_points(points)
    }

    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 || points[0] != 0.0 {
            return Err(Error::param(
                "storage grid",
                "need at least two points starting at 0",
            ));
        }
        if points.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::param("storage grid", "points must be strictly increasing"));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The same grid multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            points: self.points.iter().map(|x| x * factor).collect(),
        }
    }
}

/// Starting point of the fixed-point iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitialGuess {
    /// `P = p(I + mu_Y)`: consumption pricing at mean output.
    #[default]
    MeanOutput,
    /// `f(x) = p(x)`: no storage at all.
    Consumption,
    /// `f(x) = p(b)`: a flat high price.
    Flat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub grid: StorageGrid,
    pub tol: f64,
    pub max_iters: usize,
    /// Keep iterating at least this many times even after convergence.
    pub min_iters: usize,
    pub initial: InitialGuess,
    pub xstar_cap_factor: f64,
    pub grid_max: f64,
}

impl SolverOptions {
    pub fn from_numerics(n: &Numerics) -> Result<Self> {
        Ok(Self {
            grid: StorageGrid::exponential(n.n_storage_grid, n.storage_grid_max, n.storage_grid_median)?,
            tol: n.tol,
            max_iters: n.max_iters,
            min_iters: 0,
            initial: InitialGuess::default(),
            xstar_cap_factor: n.xstar_cap_factor,
            grid_max: n.storage_grid_max,
        })
    }

    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        Self::from_numerics(&spec.numerics)
    }
}

/// Availability and price nodes per exogenous state: `x[j][s]`, `p[j][s]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub x: Vec<Vec<f64>>,
    pub p: Vec<Vec<f64>>,
}

/// Piecewise-linear demand function of one state: `D(x) = p^{-1}(f(x))`.
///
/// Below the first node no stocks are carried, so `D(x) = x`; above the last
/// node the last segment is extended.
#[derive(Debug, Clone, Copy)]
struct Column<'a> {
    x: &'a [f64],
    d: &'a [f64],
}

impl Column<'_> {
    #[inline]
    fn segment(&self, i: usize, q: f64) -> f64 {
        let (x0, x1) = (self.x[i], self.x[i + 1]);
        self.d[i] + (self.d[i + 1] - self.d[i]) * (q - x0) / (x1 - x0)
    }

    /// Evaluates `D(q)`, starting the search at `*hint` and moving it forward.
    /// Successive queries must be nondecreasing.
    #[inline]
    fn demand_from(&self, q: f64, hint: &mut usize) -> f64 {
        if q <= self.x[0] {
            return q;
        }
        let last = self.x.len() - 2;
        while *hint < last && self.x[*hint + 1] <= q {
            *hint += 1;
        }
        self.segment(*hint, q)
    }

    fn demand(&self, q: f64) -> f64 {
        if q <= self.x[0] {
            return q;
        }
        let i = self
            .x
            .partition_point(|&v| v <= q)
            .saturating_sub(1)
            .min(self.x.len() - 2);
        self.segment(i, q)
    }
}

#[derive(Debug, Clone, Copy)]
struct Pricing {
    demand: DemandCurve,
    pb: f64,
}

impl Pricing {
    fn of(economy: &Economy) -> Self {
        Self {
            demand: economy.demand,
            pb: economy.p_of_b(),
        }
    }

    #[inline]
    fn clamp(&self, price: f64) -> f64 {
        price.min(self.pb).max(0.0)
    }

    #[inline]
    fn price(&self, d: f64) -> f64 {
        self.clamp(self.demand.p(d))
    }
}

fn demand_columns(policy: &Policy, demand: &DemandCurve) -> Vec<Vec<f64>> {
    policy
        .p
        .iter()
        .map(|col| col.iter().map(|&p| demand.p_inv(p)).collect())
        .collect()
}

/// Unclamped Euler-equation prices `P~[j][s]` implied by the continuation
/// policy.
fn expected_prices(economy: &Economy, grid: &StorageGrid, cont: &Policy) -> Vec<Vec<f64>> {
    let pricing = Pricing::of(economy);
    let d_cols = demand_columns(cont, &economy.demand);
    let disc = (-economy.delta).exp();
    let carry: Vec<f64> = grid.points().iter().map(|i| disc * i).collect();
    let n = economy.n_states();
    let kk = grid.len();

    // E_m[f(y(m, eta) + e^{-delta} I_s, m)] for each next state m.
    let ef: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|m| {
            let col = Column {
                x: &cont.x[m],
                d: &d_cols[m],
            };
            let mut acc = vec![0.0; kk];
            for (&eta, &w) in economy.eta.nodes().iter().zip(economy.eta.weights()) {
                let y = economy.y(m, eta);
                let mut hint = 0;
                for (a, &c) in acc.iter_mut().zip(&carry) {
                    *a += w * pricing.price(col.demand_from(y + c, &mut hint));
                }
            }
            let mm = economy.m_per_state[m];
            acc.iter_mut().for_each(|a| *a *= mm);
            acc
        })
        .collect();

    let rows = economy.chain.sparse_rows();
    (0..n)
        .into_par_iter()
        .map(|j| {
            let mut out = vec![0.0; kk];
            for &(m, phi) in rows.row(j) {
                for (o, e) in out.iter_mut().zip(&ef[m]) {
                    *o += phi * e;
                }
            }
            out.iter_mut().for_each(|o| *o = disc * *o - economy.k);
            out
        })
        .collect()
}

fn step_full(economy: &Economy, grid: &StorageGrid, cont: &Policy) -> Result<(Policy, Vec<f64>)> {
    let n = economy.n_states();
    if cont.x.len() != n || cont.p.len() != n || cont.x.iter().chain(&cont.p).any(|c| c.len() != grid.len()) {
        return Err(Error::param("current", "policy arrays must be K x N"));
    }
    let pricing = Pricing::of(economy);
    let ptilde = expected_prices(economy, grid, cont);
    let mut x = Vec::with_capacity(n);
    let mut p = Vec::with_capacity(n);
    for (j, col) in ptilde.iter().enumerate() {
        let mut xc = Vec::with_capacity(grid.len());
        let mut pc = Vec::with_capacity(grid.len());
        for (s, (&pt, &i)) in col.iter().zip(grid.points()).enumerate() {
            let price = pricing.clamp(pt);
            let xv = i + economy.demand.p_inv(price);
            if !(pt.is_finite() && xv.is_finite()) {
                return Err(Error::NonFinite { s, j });
            }
            xc.push(xv);
            pc.push(price);
        }
        x.push(xc);
        p.push(pc);
    }
    let p0 = ptilde.iter().map(|c| c[0]).collect();
    Ok((Policy { x, p }, p0))
}

/// One application of the equilibrium operator on the grid of stocks.
pub fn egm_step(economy: &Economy, grid: &StorageGrid, current: &Policy) -> Result<Policy> {
    step_full(economy, grid, current).map(|(p, _)| p)
}

/// Policy representing the chosen initial guess.
pub fn initial_policy(economy: &Economy, grid: &StorageGrid, guess: InitialGuess) -> Policy {
    let pricing = Pricing::of(economy);
    let n = economy.n_states();
    let (x, p): (Vec<f64>, Vec<f64>) = match guess {
        InitialGuess::MeanOutput => {
            let mu = economy.eta_law.0;
            grid.points()
                .iter()
                .map(|&i| {
                    let price = pricing.clamp(economy.demand.p(i + mu));
                    (i + economy.demand.p_inv(price), price)
                })
                .unzip()
        }
        InitialGuess::Consumption => grid
            .points()
            .iter()
            .map(|&i| (economy.b + i, pricing.price(economy.b + i)))
            .unzip(),
        InitialGuess::Flat => {
            let top = pricing.clamp(economy.demand.p(economy.b));
            grid.points().iter().map(|&i| (economy.b + i, top)).unzip()
        }
    };
    Policy {
        x: vec![x; n],
        p: vec![p; n],
    }
}

/// Solved equilibrium on the grid of stocks.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSolution {
    pub grid: StorageGrid,
    /// Availability nodes `x[j][s]`.
    pub x: Vec<Vec<f64>>,
    /// Price nodes `p[j][s]`.
    pub p: Vec<Vec<f64>>,
    /// Demand nodes `p^{-1}(p[j][s])`.
    pub d: Vec<Vec<f64>>,
    /// Price below which stocks are carried, per state.
    pub pbar_threshold: Vec<f64>,
    /// Free-disposal availability per state (`+inf` if none).
    pub xstar: Vec<f64>,
    pub iterations: usize,
    pub final_residual: f64,
    pub residual_history: Vec<f64>,
    pub demand: DemandCurve,
    /// Lower availability bound and the price there.
    pub b: f64,
    pub pb: f64,
}

impl EquilibriumSolution {
    pub fn n_states(&self) -> usize {
        self.x.len()
    }

    pub fn policy(&self) -> Policy {
        Policy {
            x: self.x.clone(),
            p: self.p.clone(),
        }
    }

    fn column(&self, j: usize) -> Column<'_> {
        Column {
            x: &self.x[j],
            d: &self.d[j],
        }
    }

    fn check_state(&self, x: f64, j: usize) -> Result<()> {
        if j >= self.n_states() {
            return Err(Error::InvalidState {
                state: j,
                reason: format!("only {} states", self.n_states()),
            });
        }
        if !(x >= self.b - 1e-12 * self.b.abs().max(1.0)) {
            return Err(Error::BelowLowerBound { x, b: self.b });
        }
        Ok(())
    }

    /// Demand `D(x, z_j)` before disposal and clamping.
    pub fn demand_at(&self, x: f64, j: usize) -> f64 {
        self.column(j).demand(x)
    }

    /// Price without range checks; used on hot paths.
    pub(crate) fn price_unchecked(&self, x: f64, j: usize) -> f64 {
        if x >= self.xstar[j] {
            return 0.0;
        }
        self.demand.p(self.column(j).demand(x)).min(self.pb).max(0.0)
    }

    pub(crate) fn storage_unchecked(&self, x: f64, j: usize) -> f64 {
        if x >= self.xstar[j] {
            return (self.xstar[j] - self.demand.satiation()).max(0.0);
        }
        let price = self.price_unchecked(x, j);
        let i = x - self.demand.p_inv(price);
        if i < 0.0 {
            if i < -1e-9 {
                log::warn!("negative storage {i:e} at x = {x}, state {j}; floored at 0");
            }
            return 0.0;
        }
        i
    }
}

/// Equilibrium price `f*(x, z_j)`.
pub fn price_at(sol: &EquilibriumSolution, x: f64, j: usize) -> Result<f64> {
    sol.check_state(x, j)?;
    Ok(sol.price_unchecked(x, j))
}

/// Equilibrium storage `i*(x, z_j)`.
pub fn storage_at(sol: &EquilibriumSolution, x: f64, j: usize) -> Result<f64> {
    sol.check_state(x, j)?;
    Ok(sol.storage_unchecked(x, j))
}

/// Free-disposal thresholds implied by a continuation policy.
fn disposal_thresholds(economy: &Economy, cont: &Policy, cap: f64) -> Vec<f64> {
    let satiation = economy.demand.satiation();
    if !satiation.is_finite() {
        return vec![f64::INFINITY; economy.n_states()];
    }
    let pricing = Pricing::of(economy);
    let d_cols = demand_columns(cont, &economy.demand);
    let disc = (-economy.delta).exp();
    let rows = economy.chain.sparse_rows();
    let expected = |j: usize, x: f64| -> f64 {
        let carry = disc * (x - satiation);
        let mut ev = 0.0;
        for &(m, phi) in rows.row(j) {
            let col = Column {
                x: &cont.x[m],
                d: &d_cols[m],
            };
            let inner = economy
                .eta
                .expect(|e| pricing.price(col.demand(economy.y(m, e) + carry)));
            ev += phi * economy.m_per_state[m] * inner;
        }
        disc * ev - economy.k
    };
    (0..economy.n_states())
        .into_par_iter()
        .map(|j| {
            let hi0 = satiation + cap;
            if expected(j, hi0) > 0.0 {
                return f64::INFINITY;
            }
            let (mut lo, mut hi) = (satiation, hi0);
            if expected(j, lo) <= 0.0 {
                return lo;
            }
            while hi - lo > 1e-10 {
                let mid = 0.5 * (lo + hi);
                if expected(j, mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            hi
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    economy: &Economy,
    grid: &StorageGrid,
    cont: &Policy,
    next: Policy,
    ptilde0: Vec<f64>,
    cap: f64,
    iterations: usize,
    history: Vec<f64>,
) -> EquilibriumSolution {
    let pricing = Pricing::of(economy);
    let d = demand_columns(&next, &economy.demand);
    EquilibriumSolution {
        grid: grid.clone(),
        pbar_threshold: ptilde0.iter().map(|&p| pricing.clamp(p)).collect(),
        xstar: disposal_thresholds(economy, cont, cap),
        x: next.x,
        p: next.p,
        d,
        iterations,
        final_residual: history.last().copied().unwrap_or(f64::NAN),
        residual_history: history,
        demand: economy.demand,
        b: economy.b,
        pb: pricing.pb,
    }
}

fn sup_change(a: &Policy, b: &Policy) -> f64 {
    a.p.iter()
        .flatten()
        .zip(b.p.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Iterates the equilibrium operator from `start` until the sup-norm price
/// change falls below the tolerance.
pub fn solve_from(economy: &Economy, opts: &SolverOptions, start: Policy) -> Result<EquilibriumSolution> {
    validate(economy).require()?;
    let grid = &opts.grid;
    let cap = opts.xstar_cap_factor * opts.grid_max;
    let mut cont = start;
    let mut history = Vec::new();
    for it in 1..=opts.max_iters {
        let (next, p0) = step_full(economy, grid, &cont)?;
        let change = sup_change(&next, &cont);
        history.push(change);
        log::debug!("iteration {it}: price change {change:e}");
        if change < opts.tol && it >= opts.min_iters {
            return Ok(assemble(economy, grid, &cont, next, p0, cap, it, history));
        }
        cont = next;
    }
    Err(Error::NoConvergence {
        what: "equilibrium price iteration",
        iterations: opts.max_iters,
        residual: history.last().copied().unwrap_or(f64::NAN),
        history,
    })
}

/// Solves for the equilibrium pricing rule of `economy`.
pub fn solve_egm(economy: &Economy, opts: &SolverOptions) -> Result<EquilibriumSolution> {
    let start = initial_policy(economy, &opts.grid, opts.initial);
    solve_from(economy, opts, start)
}

/// Economy identical to `spec` except for a constant net per-period rate `r`.
pub fn constant_rate_economy(spec: &ModelSpec, r: f64) -> Result<Economy> {
    if !(1.0 + r > 0.0) {
        return Err(Error::param("r", "gross rate must be positive"));
    }
    if !((1.0 + r).ln() + spec.delta > 0.0) {
        return Err(Error::Discounting((1.0 + r).ln() + spec.delta));
    }
    let spec = ModelSpec {
        chain: ChainKind::Constant { r },
        ..spec.clone()
    };
    build_economy(&spec)
}

/// Solves the model with a constant net per-period rate `r`.
pub fn solve_constant_rate(spec: &ModelSpec, r: f64) -> Result<EquilibriumSolution> {
    let economy = constant_rate_economy(spec, r)?;
    solve_egm(&economy, &SolverOptions::from_spec(spec)?)
}

/// Applies the equilibrium operator of `economy_high` once to a solved
/// pricing rule. The returned solution prices the period in which the
/// economy temporarily operates under the higher rate.
pub fn mit_operator_step(
    sol_low: &EquilibriumSolution,
    economy_high: &Economy,
    opts: &SolverOptions,
) -> Result<EquilibriumSolution> {
    let cont = sol_low.policy();
    let (next, p0) = step_full(economy_high, &sol_low.grid, &cont)?;
    let change = sup_change(&next, &cont);
    let cap = opts.xstar_cap_factor * opts.grid_max;
    Ok(assemble(
        economy_high,
        &sol_low.grid,
        &cont,
        next,
        p0,
        cap,
        1,
        vec![change],
    ))
}

/// Rebuilds a solution from stored nodes (no iteration).
#[allow(clippy::too_many_arguments)]
pub fn solution_from_nodes(
    grid: StorageGrid,
    x: Vec<Vec<f64>>,
    p: Vec<Vec<f64>>,
    pbar_threshold: Vec<f64>,
    xstar: Vec<f64>,
    iterations: usize,
    residual_history: Vec<f64>,
    demand: DemandCurve,
    b: f64,
) -> EquilibriumSolution {
    let policy = Policy { x, p };
    let d = demand_columns(&policy, &demand);
    let pb = if demand.is_linear() {
        demand.p(b)
    } else {
        f64::INFINITY
    };
    EquilibriumSolution {
        grid,
        x: policy.x,
        p: policy.p,
        d,
        pbar_threshold,
        xstar,
        iterations,
        final_residual: residual_history.last().copied().unwrap_or(f64::NAN),
        residual_history,
        demand,
        b,
        pb,
    }
}
