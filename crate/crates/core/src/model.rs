//! Economy description, existence checks and primitive functions.

use crate::error::{Error, Result};
use crate::process::{
    discretize_var1, kappa, tauchen_ar1, truncated_normal_rule, DiscountOperator, MarkovChain,
    QuadratureRule, VarSpec,
};
use serde::{Deserialize, Serialize};

/// Inverse demand curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DemandCurve {
    /// `p(x) = pbar [1 + (x / mu_y - 1) / lambda]`.
    Linear { pbar: f64, mu_y: f64, lambda: f64 },
    /// `p(x) = x^(-1/lam)`; unbounded as `x -> 0`.
    Isoelastic { lam: f64 },
}

impl Default for DemandCurve {
    fn default() -> Self {
        DemandCurve::Linear {
            pbar: 1.0,
            mu_y: 1.0,
            lambda: -0.06,
        }
    }
}

impl DemandCurve {
    pub fn check(&self) -> Result<()> {
        match *self {
            DemandCurve::Linear { pbar, mu_y, lambda } => {
                if !(pbar > 0.0 && pbar.is_finite()) {
                    return Err(Error::param("demand.pbar", "must be positive"));
                }
                if !(mu_y > 0.0 && mu_y.is_finite()) {
                    return Err(Error::param("demand.mu_y", "must be positive"));
                }
                if !(lambda < 0.0 && lambda.is_finite()) {
                    return Err(Error::param("demand.lambda", "must be negative"));
                }
            }
            DemandCurve::Isoelastic { lam } => {
                if !(lam > 0.0 && lam.is_finite()) {
                    return Err(Error::param("demand.lam", "must be positive"));
                }
            }
        }
        Ok(())
    }

    pub fn p(&self, x: f64) -> f64 {
        match *self {
            DemandCurve::Linear { pbar, mu_y, lambda } => pbar * (1.0 + (x / mu_y - 1.0) / lambda),
            DemandCurve::Isoelastic { lam } => x.powf(-1.0 / lam),
        }
    }

    pub fn p_inv(&self, price: f64) -> f64 {
        match *self {
            DemandCurve::Linear { pbar, mu_y, lambda } => mu_y * (1.0 + lambda * (price / pbar - 1.0)),
            DemandCurve::Isoelastic { lam } => price.powf(-lam),
        }
    }

    /// Quantity consumed at a zero price (`+inf` for isoelastic demand).
    pub fn satiation(&self) -> f64 {
        self.p_inv(0.0)
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, DemandCurve::Linear { .. })
    }

    /// Intercept and slope `(a, d)` of `p(x) = a + d x`.
    pub fn linear_coefficients(&self) -> Option<(f64, f64)> {
        match *self {
            DemandCurve::Linear { pbar, mu_y, lambda } => {
                Some((pbar * (1.0 - 1.0 / lambda), pbar / (lambda * mu_y)))
            }
            DemandCurve::Isoelastic { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateProcess {
    /// Mean gross annual rate.
    pub mu_r: f64,
    pub rho_r: f64,
    /// Unconditional standard deviation of the annual rate.
    pub sigma_r: f64,
}

impl Default for RateProcess {
    fn default() -> Self {
        Self {
            mu_r: 1.0062,
            rho_r: 0.9407,
            sigma_r: 0.03,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActivityProcess {
    pub rho_a: f64,
    pub gamma: f64,
    /// Loading of commodity demand on activity.
    pub alpha: f64,
}

impl Default for ActivityProcess {
    fn default() -> Self {
        Self {
            rho_a: 0.52,
            gamma: 0.95,
            alpha: 0.0,
        }
    }
}

/// How the exogenous chain is built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChainKind {
    /// Rate-only chain when `alpha == 0`, joint rate/activity chain otherwise.
    #[default]
    Auto,
    /// Rate-only chain regardless of `alpha`.
    Rate,
    /// Joint rate/activity chain regardless of `alpha`.
    Joint,
    /// A constant net per-period rate `r`.
    Constant { r: f64 },
    /// A user-supplied chain with per-period discount factors and additive
    /// output shifts for each state.
    Explicit {
        chain: MarkovChain,
        discount: Vec<f64>,
        output_shift: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    pub n_rate_states: usize,
    pub n_activity_states: usize,
    /// Half-width of discretisation grids, in stationary standard deviations.
    pub coverage: f64,
    pub n_storage_grid: usize,
    pub storage_grid_max: f64,
    pub storage_grid_median: f64,
    pub n_quad_nodes: usize,
    pub tol: f64,
    pub max_iters: usize,
    /// Search cap for the free-disposal threshold, in multiples of
    /// `storage_grid_max` above the satiation quantity.
    pub xstar_cap_factor: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            n_rate_states: 101,
            n_activity_states: 41,
            coverage: 3.0,
            n_storage_grid: 1000,
            storage_grid_max: 2.0,
            storage_grid_median: 0.5,
            n_quad_nodes: 7,
            tol: 1e-4,
            max_iters: 10_000,
            xstar_cap_factor: 10.0,
        }
    }
}

fn default_trunc_sd() -> f64 {
    5.0
}

/// Full description of an economy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub delta: f64,
    #[serde(default)]
    pub k: f64,
    pub demand: DemandCurve,
    /// Coefficient of variation of output.
    pub sigma_y: f64,
    /// Mean output; defaults to the demand curve's `mu_y` (or 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_mean: Option<f64>,
    #[serde(default = "default_trunc_sd")]
    pub trunc_sd: f64,
    pub rate: RateProcess,
    #[serde(default)]
    pub activity: ActivityProcess,
    #[serde(default)]
    pub chain: ChainKind,
    #[serde(default)]
    pub numerics: Numerics,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            delta: 0.02,
            k: 0.0,
            demand: DemandCurve::default(),
            sigma_y: 0.05,
            output_mean: None,
            trunc_sd: default_trunc_sd(),
            rate: RateProcess::default(),
            activity: ActivityProcess::default(),
            chain: ChainKind::Auto,
            numerics: Numerics::default(),
        }
    }
}

impl ModelSpec {
    pub fn output_mean(&self) -> f64 {
        self.output_mean.unwrap_or(match self.demand {
            DemandCurve::Linear { mu_y, .. } => mu_y,
            DemandCurve::Isoelastic { .. } => 1.0,
        })
    }

    fn check(&self) -> Result<()> {
        self.demand.check()?;
        let nonneg = |name, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be nonnegative, got {v}")))
            }
        };
        nonneg("delta", self.delta)?;
        nonneg("k", self.k)?;
        nonneg("sigma_y", self.sigma_y)?;
        nonneg("activity.alpha", self.activity.alpha)?;
        nonneg("activity.gamma", self.activity.gamma)?;
        if !(self.activity.rho_a.abs() < 1.0) {
            return Err(Error::param("activity.rho_a", "must lie in (-1, 1)"));
        }
        if !(self.rate.rho_r.abs() < 1.0) {
            return Err(Error::param("rate.rho_r", "must lie in (-1, 1)"));
        }
        if !(self.rate.sigma_r > 0.0) {
            return Err(Error::param("rate.sigma_r", "must be positive"));
        }
        if !(self.rate.mu_r > 0.0) {
            return Err(Error::param("rate.mu_r", "gross rate must be positive"));
        }
        if !(self.trunc_sd > 0.0 && self.trunc_sd.is_finite()) {
            return Err(Error::param("trunc_sd", "must be positive and finite"));
        }
        if !(self.output_mean() > 0.0) {
            return Err(Error::param("output_mean", "must be positive"));
        }
        let n = &self.numerics;
        if n.n_storage_grid < 2 {
            return Err(Error::param("numerics.n_storage_grid", "need at least two nodes"));
        }
        if !(n.storage_grid_max > 0.0
            && n.storage_grid_median > 0.0
            && n.storage_grid_median < n.storage_grid_max)
        {
            return Err(Error::param(
                "numerics.storage_grid_median",
                "need 0 < median < max",
            ));
        }
        if n.n_quad_nodes < 1 || n.n_rate_states < 1 || n.n_activity_states < 1 {
            return Err(Error::param("numerics", "node counts must be at least one"));
        }
        if !(n.tol > 0.0) {
            return Err(Error::param("numerics.tol", "must be positive"));
        }
        Ok(())
    }
}

/// A fully assembled economy: exogenous chain, discounting, output law and
/// demand.
#[derive(Debug, Clone)]
pub struct Economy {
    pub chain: MarkovChain,
    /// Expected one-period discount factor in each state.
    pub m_per_state: Vec<f64>,
    /// Innovation rule for the discount factor and `m(z, eps_l)` per state.
    pub eps: QuadratureRule,
    pub m_table: Vec<Vec<f64>>,
    /// `y(z, eta) = eta + output_shift[z]`.
    pub output_shift: Vec<f64>,
    pub eta: QuadratureRule,
    /// Mean, standard deviation and truncation (in sd) of the output draw.
    pub eta_law: (f64, f64, f64),
    /// Gross annual rate of each state.
    pub rate_annual: Vec<f64>,
    /// Activity level of each state (zero without a demand channel).
    pub activity: Vec<f64>,
    pub alpha: f64,
    pub gamma: f64,
    pub demand: DemandCurve,
    pub delta: f64,
    pub k: f64,
    /// Lower bound of availability.
    pub b: f64,
}

/// Ingredients for [`Economy::from_parts`].
#[derive(Debug, Clone)]
pub struct EconomyParts {
    pub chain: MarkovChain,
    pub discount: Vec<f64>,
    pub output_shift: Vec<f64>,
    pub output_mean: f64,
    pub output_sd: f64,
    pub trunc_sd: f64,
    pub n_quad_nodes: usize,
    pub demand: DemandCurve,
    pub delta: f64,
    pub k: f64,
}

impl Economy {
    /// Assembles an economy from an explicit chain and per-state discount
    /// factors and output shifts, then checks the validity condition.
    pub fn from_parts(parts: EconomyParts) -> Result<Self> {
        let n = parts.chain.len();
        if parts.discount.len() != n || parts.output_shift.len() != n {
            return Err(Error::param(
                "discount",
                "need one discount factor and output shift per state",
            ));
        }
        parts.demand.check()?;
        let eta = if parts.output_sd > 0.0 {
            truncated_normal_rule(
                parts.output_mean,
                parts.output_sd,
                parts.trunc_sd,
                parts.n_quad_nodes,
            )?
        } else {
            QuadratureRule::degenerate(parts.output_mean)
        };
        for (i, &m) in parts.discount.iter().enumerate() {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::InvalidState {
                    state: i,
                    reason: format!("discount factor {m} is not strictly positive"),
                });
            }
        }
        let eta_lo = parts.output_mean - parts.trunc_sd * parts.output_sd;
        let b = parts
            .output_shift
            .iter()
            .map(|s| eta_lo + s)
            .fold(f64::INFINITY, f64::min);
        if !b.is_finite() {
            return Err(Error::param(
                "output",
                "lower bound of availability is not finite",
            ));
        }
        if !parts.demand.is_linear() && b <= 0.0 {
            return Err(Error::param(
                "output",
                "isoelastic demand needs strictly positive output",
            ));
        }
        let rate_annual = parts.discount.iter().map(|m| m.powi(-4)).collect();
        let eco = Economy {
            m_table: parts.discount.iter().map(|&m| vec![m]).collect(),
            m_per_state: parts.discount,
            eps: QuadratureRule::degenerate(0.0),
            output_shift: parts.output_shift,
            eta,
            eta_law: (parts.output_mean, parts.output_sd, parts.trunc_sd),
            rate_annual,
            activity: vec![0.0; n],
            alpha: 0.0,
            gamma: 0.0,
            demand: parts.demand,
            delta: parts.delta,
            k: parts.k,
            b,
            chain: parts.chain,
        };
        eco.check_validity()?;
        Ok(eco)
    }

    pub fn n_states(&self) -> usize {
        self.chain.len()
    }

    /// Net output in state `j` for output draw `eta`.
    pub fn y(&self, j: usize, eta: f64) -> f64 {
        eta + self.output_shift[j]
    }

    /// Price at the lower availability bound (`+inf` for isoelastic demand).
    pub fn p_of_b(&self) -> f64 {
        if self.demand.is_linear() {
            self.demand.p(self.b)
        } else {
            f64::INFINITY
        }
    }

    /// Gross per-period rate of each state.
    pub fn gross_rate(&self) -> Vec<f64> {
        self.m_per_state.iter().map(|m| 1.0 / m).collect()
    }

    pub fn discount_operator(&self) -> Result<DiscountOperator> {
        DiscountOperator::new(self.chain.clone(), self.m_per_state.clone())
    }

    /// Per-state margin `e^{-delta} E_z[M' p(Y')] - k` of the validity
    /// condition.
    pub fn validity_margins(&self) -> Vec<f64> {
        let pv: Vec<f64> = (0..self.n_states())
            .map(|m| self.m_per_state[m] * self.eta.expect(|e| self.demand.p(self.y(m, e)).max(0.0)))
            .collect();
        (0..self.n_states())
            .map(|j| {
                let ev: f64 = self.chain.row(j).iter().zip(&pv).map(|(p, v)| p * v).sum();
                (-self.delta).exp() * ev - self.k
            })
            .collect()
    }

    fn check_validity(&self) -> Result<()> {
        for (state, margin) in self.validity_margins().into_iter().enumerate() {
            if !(margin > 0.0) {
                return Err(Error::Validity { state, margin });
            }
        }
        Ok(())
    }
}

/// Builds the economy described by `spec`.
pub fn build_economy(spec: &ModelSpec) -> Result<Economy> {
    spec.check()?;
    let num = &spec.numerics;
    let r = &spec.rate;
    let a = &spec.activity;
    let joint = match spec.chain {
        ChainKind::Auto => a.alpha > 0.0,
        ChainKind::Joint => true,
        _ => false,
    };
    let (chain, discount, shift, rate_annual, activity) = match &spec.chain {
        ChainKind::Constant { r } => {
            if !(1.0 + r > 0.0) {
                return Err(Error::param("chain.r", "gross rate 1 + r must be positive"));
            }
            let m = 1.0 / (1.0 + r);
            (
                MarkovChain::degenerate(vec![1.0 + r]),
                vec![m],
                vec![0.0],
                vec![(1.0 + r).powi(4)],
                vec![0.0],
            )
        }
        ChainKind::Explicit {
            chain,
            discount,
            output_shift,
        } => {
            let n = chain.len();
            if discount.len() != n || output_shift.len() != n {
                return Err(Error::param(
                    "chain",
                    "need one discount factor and output shift per state",
                ));
            }
            let rate = discount.iter().map(|m| m.powi(-4)).collect();
            (
                chain.clone(),
                discount.clone(),
                output_shift.clone(),
                rate,
                vec![0.0; n],
            )
        }
        _ if joint => {
            let v = VarSpec {
                mu_r: r.mu_r,
                rho_r: r.rho_r,
                sigma_r: r.sigma_r,
                rho_a: a.rho_a,
                gamma: a.gamma,
            };
            let chain = discretize_var1(&v, (num.n_rate_states, num.n_activity_states), num.coverage)?;
            let rate = chain.coordinate(0);
            let act = chain.coordinate(1);
            let shift = act.iter().map(|x| -a.alpha * x).collect();
            (
                chain,
                rate.iter().map(|x| x.powf(-0.25)).collect(),
                shift,
                rate,
                act,
            )
        }
        _ => {
            let innov = r.sigma_r * (1.0 - r.rho_r * r.rho_r).sqrt();
            let chain = tauchen_ar1(r.mu_r, r.rho_r, innov, num.n_rate_states, num.coverage)?;
            let rate = chain.coordinate(0);
            let n = chain.len();
            (
                chain,
                rate.iter().map(|x| x.powf(-0.25)).collect(),
                vec![0.0; n],
                rate,
                vec![0.0; n],
            )
        }
    };
    if let Some(i) = rate_annual.iter().position(|&x| !(x > 0.0)) {
        return Err(Error::InvalidState {
            state: i,
            reason: format!("gross rate {} is not positive", rate_annual[i]),
        });
    }
    let mu = spec.output_mean();
    let mut eco = Economy::from_parts(EconomyParts {
        chain,
        discount,
        output_shift: shift,
        output_mean: mu,
        output_sd: mu * spec.sigma_y,
        trunc_sd: spec.trunc_sd,
        n_quad_nodes: num.n_quad_nodes,
        demand: spec.demand,
        delta: spec.delta,
        k: spec.k,
    })?;
    eco.rate_annual = rate_annual;
    eco.activity = activity;
    if joint {
        eco.alpha = a.alpha;
        eco.gamma = a.gamma;
    }
    Ok(eco)
}

/// Outcome of the existence checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// Asymptotic yield `kappa(M)`; `NaN` if it could not be computed.
    pub kappa: f64,
    pub delta: f64,
    /// `kappa(M) + delta > 0`.
    pub discounting_ok: bool,
    /// Validity margin per state.
    pub margins: Vec<f64>,
    pub validity_ok: bool,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.discounting_ok && self.validity_ok
    }

    /// Turns a failed report into the matching error.
    pub fn require(&self) -> Result<()> {
        if !self.discounting_ok {
            return Err(Error::Discounting(self.kappa + self.delta));
        }
        if let Some((state, &margin)) = self.margins.iter().enumerate().find(|(_, m)| !(**m > 0.0)) {
            return Err(Error::Validity { state, margin });
        }
        Ok(())
    }
}

/// Evaluates the discounting condition and the per-state validity margins.
pub fn validate(economy: &Economy) -> ValidationReport {
    let kappa = economy
        .discount_operator()
        .and_then(|op| kappa(&op))
        .unwrap_or(f64::NAN);
    let margins = economy.validity_margins();
    ValidationReport {
        kappa,
        delta: economy.delta,
        discounting_ok: kappa + economy.delta > 0.0,
        validity_ok: margins.iter().all(|&m| m > 0.0),
        margins,
    }
}

/// The economy whose output is `mu + sigma Y` and whose linear demand is
/// re-based so that it generates the same price process.
pub fn rescale_economy(spec: &ModelSpec, mu: f64, sigma: f64) -> Result<ModelSpec> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::param("sigma", "must be positive"));
    }
    let DemandCurve::Linear { pbar, mu_y, .. } = spec.demand else {
        return Err(Error::param("demand", "rescaling requires linear demand"));
    };
    let old_mean = spec.output_mean();
    let new_mean = mu + sigma * old_mean;
    if !(new_mean > 0.0) {
        return Err(Error::param("mu", "rescaled mean output must be positive"));
    }
    // Keep the slope d/sigma and intercept a - d mu / sigma of p(x) = a + d x.
    let (a, d) = spec.demand.linear_coefficients().expect("linear");
    let new_a = a - d * mu / sigma;
    let new_d = d / sigma;
    let new_mu_y = mu + sigma * mu_y;
    let new_pbar = new_a + new_d * new_mu_y;
    let new_lambda = new_pbar / (new_d * new_mu_y);
    debug_assert!((new_pbar - pbar).abs() <= 1e-12 * pbar.max(1.0));

    let mut out = spec.clone();
    out.demand = DemandCurve::Linear {
        pbar: new_pbar,
        mu_y: new_mu_y,
        lambda: new_lambda,
    };
    out.output_mean = spec.output_mean.map(|_| new_mean);
    out.sigma_y = spec.sigma_y * sigma * old_mean / new_mean;
    out.activity.alpha = spec.activity.alpha * sigma;
    out.numerics.storage_grid_max = spec.numerics.storage_grid_max * sigma;
    out.numerics.storage_grid_median = spec.numerics.storage_grid_median * sigma;
    if let ChainKind::Explicit {
        chain,
        discount,
        output_shift,
    } = &spec.chain
    {
        out.chain = ChainKind::Explicit {
            chain: chain.clone(),
            discount: discount.clone(),
            output_shift: output_shift.iter().map(|s| sigma * s).collect(),
        };
    }
    Ok(out)
}
