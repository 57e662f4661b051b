mod common;

use common::{small, solved, spec};
use proptest::prelude::*;
use storage_core::process::stationary_distribution;
use storage_core::simulation::{
    conditional_price_moments, conditional_volatility, moments, simulate, simulate_from, DrawStream, Sampler,
};
use storage_core::solver::{price_at, storage_at};

#[test]
fn path_follows_the_law_of_motion() {
    let (sol, eco) = small();
    let path = simulate_from(&sol, &eco, 1.1, 5, 400, 0, 11, 2).unwrap();
    let sampler = Sampler::new(&eco);
    let mut draws = DrawStream::new(11, 2);
    let (mut x, mut z) = (1.1, 5);
    for t in 0..400 {
        if t > 0 {
            let (u1, u2) = draws.at(t as u64);
            let inv = storage_at(&sol, x, z).unwrap();
            z = sampler.next_state(z, u1);
            x = (-eco.delta).exp() * inv + eco.y(z, sampler.eta(u2));
        }
        assert_eq!(path.x[t], x);
        assert_eq!(path.z_index[t], z);
        assert_eq!(path.p[t], price_at(&sol, x, z).unwrap());
        assert!(
            (path.x[t] - path.i[t] - eco.demand.p_inv(path.p[t]).min(path.x[t])).abs() < 1e-9
                || path.p[t] == 0.0
        );
    }
}

#[test]
fn same_seed_same_path() {
    let (sol, eco) = small();
    let a = simulate(&sol, &eco, 5000, 100, 4).unwrap();
    assert_eq!(a, simulate(&sol, &eco, 5000, 100, 4).unwrap());
    assert_ne!(a.x, simulate(&sol, &eco, 5000, 100, 5).unwrap().x);
    assert_eq!(a.len(), 4900);
}

#[test]
fn chain_visits_match_stationary_distribution() {
    let (sol, eco) = small();
    let path = simulate(&sol, &eco, 200_000, 1000, 9).unwrap();
    let pi = stationary_distribution(&eco.chain).unwrap();
    let mut freq = vec![0.0; eco.n_states()];
    for &z in &path.z_index {
        freq[z] += 1.0 / path.len() as f64;
    }
    for (f, p) in freq.iter().zip(&pi) {
        assert!((f - p).abs() < 0.02, "{f} vs {p}");
    }
}

#[test]
fn output_draw_moments() {
    let (_, eco) = small();
    let sampler = Sampler::new(&eco);
    let mut d = DrawStream::new(3, 0);
    let n = 200_000;
    let draws: Vec<f64> = (0..n).map(|t| sampler.eta(d.at(t).1)).collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let sd = (draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let (mu, s, c) = eco.eta_law;
    assert!((mean - mu).abs() < 4.0 * s / (n as f64).sqrt());
    assert!((sd / s - 1.0).abs() < 0.01);
    assert!(draws.iter().all(|v| (v - mu).abs() <= c * s));
}

#[test]
fn conditional_moments_match_monte_carlo() {
    let (sol, eco) = small();
    let sampler = Sampler::new(&eco);
    let (x, j) = (1.2, 4);
    let (m1, m2) = conditional_price_moments(&sol, &eco, x, j);
    let carry = (-eco.delta).exp() * storage_at(&sol, x, j).unwrap();
    let mut d = DrawStream::new(5, 0);
    let n = 400_000;
    let (mut s1, mut s2) = (0.0, 0.0);
    for t in 0..n {
        let (u1, u2) = d.at(t);
        let zn = sampler.next_state(j, u1);
        let p = price_at(&sol, carry + eco.y(zn, sampler.eta(u2)), zn).unwrap();
        s1 += p;
        s2 += p * p;
    }
    let (e1, e2) = (s1 / n as f64, s2 / n as f64);
    let sd = (e2 - e1 * e1).sqrt();
    // Quadrature against sampling: allow sampling error plus a small rule error.
    assert!(
        (m1 - e1).abs() < 4.0 * sd / (n as f64).sqrt() + 1e-3 * e1,
        "{m1} vs {e1}"
    );
    let vol = conditional_volatility(&sol, &eco, x, j).unwrap();
    assert!((vol / sd - 1.0).abs() < 0.05, "{vol} vs {sd}");
    assert!(m2 >= m1 * m1);
}

#[test]
fn benchmark_moments_are_plausible() {
    let (sol, eco) = solved(&spec(100, 21));
    let path = simulate(&sol, &eco, 60_000, 5_000, 1).unwrap();
    let m = moments(&path).unwrap();
    assert!(m.cv > 0.1 && m.cv < 0.4);
    assert!(m.skew.unwrap() > 0.0);
    assert!(m.se_cv > 0.0);
}

#[test]
fn rejects_bad_arguments() {
    let (sol, eco) = small();
    assert!(simulate(&sol, &eco, 100, 100, 1).is_err());
    assert!(simulate_from(&sol, &eco, eco.b - 1.0, 0, 100, 0, 1, 0).is_err());
    assert!(simulate_from(&sol, &eco, 1.0, 99, 100, 0, 1, 0).is_err());
    let short = simulate(&sol, &eco, 500, 0, 1).unwrap();
    assert!(moments(&short).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn draws_depend_only_on_position(seed in any::<u64>(), stream in 0u64..1000, t in 0u64..10_000) {
        let mut a = DrawStream::new(seed, stream);
        let direct = a.at(t);
        let mut b = DrawStream::new(seed, stream);
        for s in 0..t.min(50) { b.at(s); }
        prop_assert_eq!(b.at(t), direct);
        prop_assert!(direct.0 > 0.0 && direct.0 < 1.0 && direct.1 > 0.0 && direct.1 < 1.0);
    }

    #[test]
    fn transitions_stay_in_support(u in 0.0f64..1.0, j in 0usize..11) {
        let (_, eco) = small();
        let k = Sampler::new(&eco).next_state(j, u);
        prop_assert!(eco.chain.prob(j, k) > 0.0);
    }
}
