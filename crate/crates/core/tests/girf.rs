mod common;

use common::{small, solved, spec};
use proptest::prelude::*;
use storage_core::girf::{
    girf, girf_at, mit_irf, percentile, Conditioning, GirfSpec, MitSpec, ShockProjector,
};
use storage_core::model::Economy;
use storage_core::simulation::{conditional_volatility, DrawStream, Sampler};
use storage_core::solver::{price_at, storage_at, EquilibriumSolution};

fn at(x0: f64, z0: usize, shock_bp: f64, n_paths: usize) -> GirfSpec {
    GirfSpec {
        x0: Conditioning::Value(x0),
        z0: Conditioning::State(z0),
        shock_bp,
        horizon: 8,
        n_paths,
        seed: 3,
        volatility: true,
    }
}

/// Serial re-computation: ensemble means of price at each horizon.
fn serial_price(
    sol: &EquilibriumSolution,
    eco: &Economy,
    x0: f64,
    z0: usize,
    g: &GirfSpec,
) -> (Vec<f64>, Vec<f64>) {
    let sampler = Sampler::new(eco);
    let proj = ShockProjector::new(eco, g.shock_bp);
    let disc = (-eco.delta).exp();
    let mut base = vec![0.0; g.horizon + 1];
    let mut shock = vec![0.0; g.horizon + 1];
    for n in 0..g.n_paths {
        let mut d = DrawStream::new(g.seed, n as u64 + 1);
        let (mut xb, mut zb, mut xs, mut zs) = (x0, z0, x0, z0);
        for h in 0..=g.horizon {
            let (u1, u2) = d.at(h as u64);
            let eta = sampler.eta(u2);
            let nb = sampler.next_state(zb, u1);
            let ns = if h == 0 {
                proj.apply(nb)
            } else {
                sampler.next_state(zs, u1)
            };
            xb = disc * storage_at(sol, xb, zb).unwrap() + eco.y(nb, eta);
            xs = disc * storage_at(sol, xs, zs).unwrap() + eco.y(ns, eta);
            zb = nb;
            zs = ns;
            base[h] += price_at(sol, xb, zb).unwrap() / g.n_paths as f64;
            shock[h] += price_at(sol, xs, zs).unwrap() / g.n_paths as f64;
        }
    }
    (base, shock)
}

#[test]
fn ensemble_means_match_serial_loop() {
    let (sol, eco) = small();
    let g = at(1.1, 5, 100.0, 2500);
    let r = girf_at(&sol, &eco, 1.1, 5, &g).unwrap();
    let (b, s) = serial_price(&sol, &eco, 1.1, 5, &g);
    for h in 0..=8 {
        assert!((r.baseline_price[h] - b[h]).abs() < 1e-12);
        assert!((r.shocked_price[h] - s[h]).abs() < 1e-12);
        let pct = 100.0 * (s[h] - b[h]) / b[h];
        assert!((r.irf_price_pct[h] - pct).abs() < 1e-9);
    }
}

#[test]
fn null_impulse_is_exactly_zero() {
    let (sol, eco) = small();
    let g = GirfSpec {
        shock_bp: 0.0,
        n_paths: 3000,
        horizon: 6,
        ..GirfSpec::default()
    };
    let r = girf(&sol, &eco, &g).unwrap();
    assert!(r.irf_price.iter().chain(&r.irf_inventory).all(|&v| v == 0.0));
    assert!(r.irf_price_pct.iter().all(|&v| v == 0.0));
    assert!(r.irf_volatility_pct.unwrap().iter().all(|&v| v == 0.0));
    assert_eq!(r.baseline_price, r.shocked_price);
}

#[test]
fn rate_rise_lowers_price_and_inventory_at_impact() {
    let (sol, eco) = solved(&spec(200, 21));
    let r = girf(
        &sol,
        &eco,
        &GirfSpec {
            n_paths: 20_000,
            volatility: false,
            ..GirfSpec::default()
        },
    )
    .unwrap();
    assert!(r.irf_price[0] < 0.0);
    assert!(r.irf_inventory[0] < 0.0);
    assert!(r.irf_price[16].abs() < 0.25 * r.irf_price[0].abs());
    assert!(r.baseline_volatility.is_none() && r.irf_volatility_pct.is_none());
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let (sol, eco) = small();
    let g = at(1.05, 3, 50.0, 5000);
    let run = |n| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .unwrap()
            .install(|| girf_at(&sol, &eco, 1.05, 3, &g).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(8));
}

#[test]
fn volatility_tracks_conditional_sd() {
    let (sol, eco) = small();
    let g = GirfSpec {
        n_paths: 1,
        ..at(1.1, 5, 0.0, 1)
    };
    let r = girf_at(&sol, &eco, 1.1, 5, &g).unwrap();
    let sampler = Sampler::new(&eco);
    let (u1, u2) = DrawStream::new(3, 1).at(0);
    let z = sampler.next_state(5, u1);
    let x = (-eco.delta).exp() * storage_at(&sol, 1.1, 5).unwrap() + eco.y(z, sampler.eta(u2));
    let v = conditional_volatility(&sol, &eco, x, z).unwrap();
    assert!((r.baseline_volatility.unwrap()[0] - v).abs() < 1e-15);
}

#[test]
fn projection_moves_rate_up() {
    let (_, eco) = small();
    let step = eco.rate_annual[1] - eco.rate_annual[0];
    let p = ShockProjector::new(&eco, 1e4 * step);
    for j in 0..eco.n_states() - 1 {
        assert_eq!(p.apply(j), j + 1);
    }
    assert_eq!(p.apply(eco.n_states() - 1), eco.n_states() - 1);
    let half = ShockProjector::new(&eco, 0.5e4 * step);
    assert_eq!(half.apply(4), 4);
    let none = ShockProjector::new(&eco, 0.0);
    assert!((0..eco.n_states()).all(|j| none.apply(j) == j));
}

#[test]
fn invalid_conditioning_rejected() {
    let (sol, eco) = small();
    assert!(girf_at(&sol, &eco, 1.0, 99, &at(1.0, 0, 1.0, 10)).is_err());
    assert!(girf_at(&sol, &eco, eco.b - 1.0, 0, &at(1.0, 0, 1.0, 10)).is_err());
    assert!(girf(
        &sol,
        &eco,
        &GirfSpec {
            horizon: 0,
            ..GirfSpec::default()
        }
    )
    .is_err());
}

#[test]
fn mit_orderings_hold() {
    let r = mit_irf(
        &spec(100, 5),
        &MitSpec {
            n_paths: 3000,
            horizon: 8,
            ..MitSpec::default()
        },
    )
    .unwrap();
    assert_eq!(r.impact_violations, 0);
    assert_eq!(r.later_violations, 0);
    assert!(r.irf.irf_price[0] < 0.0);
    assert!(r.irf.irf_price[1..].iter().all(|&v| v >= -1e-12));
    let null = mit_irf(
        &spec(100, 5),
        &MitSpec {
            r_high: 0.0015,
            n_paths: 500,
            ..MitSpec::default()
        },
    )
    .unwrap();
    assert!(null.irf.irf_price.iter().all(|&v| v == 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn percentile_matches_sorted_interpolation(v in prop::collection::vec(-10.0f64..10.0, 1..60), p in 0.0f64..100.0) {
        let mut s = v.clone();
        s.sort_by(f64::total_cmp);
        let h = (s.len() - 1) as f64 * p / 100.0;
        let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
        let want = s[lo] + (h - lo as f64) * (s[hi] - s[lo]);
        prop_assert!((percentile(&v, p) - want).abs() < 1e-12);
        prop_assert!(percentile(&v, 0.0) == s[0] && percentile(&v, 100.0) == s[s.len() - 1]);
    }
}
