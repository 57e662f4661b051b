mod common;

use common::{solved, spec};
use proptest::prelude::*;
use storage_core::model::{build_economy, ChainKind, Economy};
use storage_core::solver::{
    price_at, solve_constant_rate, solve_egm, storage_at, EquilibriumSolution, InitialGuess, SolverOptions,
};
use storage_core::Error;

/// `e^{-delta} E_z[M' f(e^{-delta} I + Y', z')] - k`, summed state by state
/// and node by node.
fn continuation(sol: &EquilibriumSolution, eco: &Economy, inv: f64, j: usize) -> f64 {
    let disc = (-eco.delta).exp();
    let mut total = 0.0;
    for jn in 0..eco.n_states() {
        let pr = eco.chain.prob(j, jn);
        if pr == 0.0 {
            continue;
        }
        let mut inner = 0.0;
        for (eta, w) in eco.eta.nodes().iter().zip(eco.eta.weights()) {
            inner += w * price_at(sol, disc * inv + eco.y(jn, *eta), jn).unwrap();
        }
        total += pr * eco.m_per_state[jn] * inner;
    }
    disc * total - eco.k
}

fn tight(spec: &storage_core::ModelSpec) -> SolverOptions {
    let mut o = SolverOptions::from_spec(spec).unwrap();
    o.tol = 1e-10;
    o
}

#[test]
fn nodes_satisfy_the_pricing_equation() {
    let s = spec(60, 7);
    let eco = build_economy(&s).unwrap();
    let sol = solve_egm(&eco, &tight(&s)).unwrap();
    let mut checked = 0;
    for j in 0..eco.n_states() {
        for (&x, &p) in sol.x[j].iter().zip(&sol.p[j]) {
            let inv = storage_at(&sol, x, j).unwrap();
            if inv > 1e-8 && x < sol.xstar[j] {
                let c = continuation(&sol, &eco, inv, j);
                assert!((p - c).abs() < 1e-8, "state {j} x {x}: {p} vs {c}");
                checked += 1;
            }
        }
    }
    assert!(checked > 300);
}

#[test]
fn no_storage_means_price_above_continuation() {
    let s = spec(60, 7);
    let eco = build_economy(&s).unwrap();
    let sol = solve_egm(&eco, &tight(&s)).unwrap();
    for j in 0..eco.n_states() {
        let x0 = eco.demand.p_inv(sol.pbar_threshold[j]);
        for t in 0..20 {
            let x = eco.b + (x0 - eco.b) * t as f64 / 20.0;
            assert_eq!(storage_at(&sol, x, j).unwrap(), 0.0);
            assert!(price_at(&sol, x, j).unwrap() >= continuation(&sol, &eco, 0.0, j) - 1e-9);
        }
    }
}

#[test]
fn initial_guesses_agree() {
    let s = spec(100, 21);
    let eco = build_economy(&s).unwrap();
    let mut sols = vec![];
    for g in [
        InitialGuess::MeanOutput,
        InitialGuess::Consumption,
        InitialGuess::Flat,
    ] {
        let mut o = SolverOptions::from_spec(&s).unwrap();
        o.initial = g;
        sols.push(solve_egm(&eco, &o).unwrap());
    }
    for other in &sols[1..] {
        let mut worst = 0.0f64;
        for j in 0..eco.n_states() {
            for t in 0..200 {
                let x = eco.b + 1.5 * t as f64 / 200.0;
                worst = worst.max((price_at(&sols[0], x, j).unwrap() - price_at(other, x, j).unwrap()).abs());
            }
        }
        assert!(worst < 10.0 * s.numerics.tol, "{worst}");
    }
}

#[test]
fn residuals_recorded_until_convergence() {
    let (sol, _) = solved(&spec(50, 5));
    assert_eq!(sol.residual_history.len(), sol.iterations);
    assert!(sol.final_residual < 1e-4);
    assert_eq!(*sol.residual_history.last().unwrap(), sol.final_residual);
}

#[test]
fn iteration_cap_reports_history() {
    let s = spec(50, 5);
    let eco = build_economy(&s).unwrap();
    let mut o = SolverOptions::from_spec(&s).unwrap();
    o.max_iters = 3;
    match solve_egm(&eco, &o) {
        Err(Error::NoConvergence {
            iterations, history, ..
        }) => {
            assert_eq!(iterations, 3);
            assert_eq!(history.len(), 3);
        }
        other => panic!("expected NoConvergence, got {other:?}"),
    }
}

#[test]
fn refuses_negative_yield() {
    let mut s = spec(50, 11);
    s.delta = 0.0;
    s.rate.mu_r = 0.98;
    let eco = build_economy(&s).unwrap();
    assert!(matches!(
        solve_egm(&eco, &SolverOptions::from_spec(&s).unwrap()),
        Err(Error::Discounting(_))
    ));
}

#[test]
fn constant_rate_matches_single_state_chain() {
    let mut s = spec(60, 5);
    let a = solve_constant_rate(&s, 0.005).unwrap();
    s.chain = ChainKind::Constant { r: 0.005 };
    let (b, _) = solved(&s);
    assert_eq!(a.p, b.p);
    assert_eq!(a.n_states(), 1);
}

#[test]
fn zero_rate_volatility_solution_is_state_independent() {
    let mut s = spec(60, 5);
    s.chain = ChainKind::Constant {
        r: 1.0062f64.powf(0.25) - 1.0,
    };
    let (flat, _) = solved(&s);
    let mut s2 = spec(60, 5);
    s2.rate.sigma_r = 1e-9;
    let (sol, eco) = solved(&s2);
    for j in 0..eco.n_states() {
        for t in 0..50 {
            let x = eco.b + 1.2 * t as f64 / 50.0;
            assert!((price_at(&sol, x, j).unwrap() - price_at(&flat, x, 0).unwrap()).abs() < 1e-4);
        }
    }
}

#[test]
fn below_lower_bound_is_an_error() {
    let (sol, eco) = solved(&spec(40, 5));
    assert!(matches!(
        price_at(&sol, eco.b - 0.1, 0),
        Err(Error::BelowLowerBound { .. })
    ));
    assert!(matches!(
        price_at(&sol, eco.b, 7),
        Err(Error::InvalidState { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn higher_constant_rate_lowers_price(r in 0.0f64..0.01, dr in 0.001f64..0.01) {
        let s = spec(50, 3);
        let lo = solve_constant_rate(&s, r).unwrap();
        let hi = solve_constant_rate(&s, r + dr).unwrap();
        let b = lo.b;
        for t in 0..60 {
            let x = b + 1.5 * t as f64 / 60.0;
            prop_assert!(price_at(&hi, x, 0).unwrap() <= price_at(&lo, x, 0).unwrap() + 2e-4);
        }
    }

    #[test]
    fn storage_bounded_by_availability(t in 0.0f64..1.0, j in 0usize..11) {
        let (sol, eco) = solved(&spec(60, 11));
        let x = eco.b + 3.0 * t;
        let i = storage_at(&sol, x, j).unwrap();
        prop_assert!(i >= 0.0 && i <= x - eco.b + 1e-9);
        let p = price_at(&sol, x, j).unwrap();
        prop_assert!(p >= 0.0 && p <= eco.p_of_b());
    }
}
