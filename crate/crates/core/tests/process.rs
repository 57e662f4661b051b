use nalgebra::DMatrix;
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};
use storage_core::process::{
    discretize_var1, kappa, spectral_radius, stationary_distribution, tauchen_ar1, truncated_normal_rule,
    DiscountOperator, MarkovChain, VarSpec,
};

fn chain_from(rows: Vec<Vec<f64>>) -> MarkovChain {
    let n = rows.len();
    let rows = rows
        .into_iter()
        .map(|r| {
            let s: f64 = r.iter().sum();
            r.into_iter().map(|v| v / s).collect()
        })
        .collect();
    MarkovChain::new((0..n).map(|i| vec![i as f64]).collect(), rows).unwrap()
}

fn eigen_radius(op: &DiscountOperator) -> f64 {
    let m = op.matrix();
    let n = m.len();
    let d = DMatrix::from_fn(n, n, |i, j| m[i][j]);
    d.complex_eigenvalues()
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max)
}

/// `-(1/n) ln max_i (L^n 1)_i` with renormalisation at every step.
fn product_limit(op: &DiscountOperator, n: usize) -> f64 {
    let k = op.chain().len();
    let mut v = vec![1.0; k];
    let mut w = vec![0.0; k];
    let mut log_scale = 0.0;
    for _ in 0..n {
        op.apply(&v, &mut w);
        let s = w.iter().cloned().fold(0.0, f64::max);
        log_scale += s.ln();
        v.iter_mut().zip(&w).for_each(|(a, b)| *a = b / s);
    }
    -log_scale / n as f64
}

#[test]
fn constant_rate_yield_is_log_gross_rate() {
    let chain = tauchen_ar1(1.0, 0.9, 0.1, 9, 3.0).unwrap();
    let op = DiscountOperator::constant(chain, 1.0 / 1.006).unwrap();
    assert!((kappa(&op).unwrap() - 1.006f64.ln()).abs() < 1e-10);
}

#[test]
fn five_state_yield_matches_product_limit() {
    let rows = vec![
        vec![0.5, 0.2, 0.1, 0.1, 0.1],
        vec![0.1, 0.6, 0.1, 0.1, 0.1],
        vec![0.05, 0.05, 0.7, 0.1, 0.1],
        vec![0.3, 0.0, 0.0, 0.4, 0.3],
        vec![0.0, 0.25, 0.25, 0.25, 0.25],
    ];
    let op = DiscountOperator::new(chain_from(rows), vec![0.97, 1.01, 0.99, 1.03, 0.95]).unwrap();
    let k = kappa(&op).unwrap();
    assert!((k - product_limit(&op, 2000)).abs() < 1e-3);
    assert!((k + eigen_radius(&op).ln()).abs() < 1e-12);
}

#[test]
fn periodic_chain_converges() {
    let op = DiscountOperator::new(chain_from(vec![vec![0.0, 1.0], vec![1.0, 0.0]]), vec![0.9, 0.8]).unwrap();
    assert!((spectral_radius(&op).unwrap() - 0.72f64.sqrt()).abs() < 1e-12);
}

#[test]
fn benchmark_rate_chain_has_positive_yield() {
    let s = 0.03 * (1.0 - 0.9407f64 * 0.9407).sqrt();
    let chain = tauchen_ar1(1.0062, 0.9407, s, 101, 3.0).unwrap();
    let m = chain.coordinate(0).iter().map(|r| r.powf(-0.25)).collect();
    let op = DiscountOperator::new(chain, m).unwrap();
    assert!(kappa(&op).unwrap() > 0.0);
}

#[test]
fn tauchen_rows_match_dense_cdf() {
    let (mu, rho, sigma, n) = (1.0062, 0.9407, 0.01, 21);
    let chain = tauchen_ar1(mu, rho, sigma, n, 3.0).unwrap();
    let z = Normal::standard();
    let pts = chain.coordinate(0);
    for i in 0..n {
        let mean = mu + rho * (pts[i] - mu);
        for j in 0..n {
            let hi = if j + 1 == n {
                1.0
            } else {
                z.cdf((0.5 * (pts[j] + pts[j + 1]) - mean) / sigma)
            };
            let lo = if j == 0 {
                0.0
            } else {
                z.cdf((0.5 * (pts[j - 1] + pts[j]) - mean) / sigma)
            };
            assert!((chain.prob(i, j) - (hi - lo)).abs() < 1e-10, "({i},{j})");
        }
    }
}

#[test]
fn stationary_distribution_is_fixed_point() {
    let chain = tauchen_ar1(0.0, 0.8, 1.0, 15, 3.0).unwrap();
    let pi = stationary_distribution(&chain).unwrap();
    let n = chain.len();
    let p = DMatrix::from_fn(n, n, |i, j| chain.prob(i, j));
    let mut power = p.clone();
    for _ in 0..12 {
        power = &power * &power;
    }
    for j in 0..n {
        assert!((pi[j] - power[(0, j)]).abs() < 1e-10);
    }
    let var: f64 = pi.iter().zip(chain.coordinate(0)).map(|(w, x)| w * x * x).sum();
    assert!((var.sqrt() - 1.0 / 0.36f64.sqrt()).abs() < 0.05 * 1.0 / 0.6);
}

#[test]
fn joint_chain_reproduces_var_moments() {
    let spec = VarSpec {
        mu_r: 1.0062,
        rho_r: 0.9407,
        sigma_r: 0.03,
        rho_a: 0.52,
        gamma: 0.95,
    };
    let chain = discretize_var1(&spec, (41, 21), 3.0).unwrap();
    assert!(chain.is_irreducible());
    let pi = stationary_distribution(&chain).unwrap();
    let (r, a) = (chain.coordinate(0), chain.coordinate(1));
    let mean = |v: &[f64]| pi.iter().zip(v).map(|(w, x)| w * x).sum::<f64>();
    let (mr, ma) = (mean(&r), mean(&a));
    let cov: f64 = pi
        .iter()
        .zip(r.iter().zip(&a))
        .map(|(w, (x, y))| w * (x - mr) * (y - ma))
        .sum();
    let var_a: f64 = pi.iter().zip(&a).map(|(w, y)| w * (y - ma).powi(2)).sum();
    let (cov_true, var_a_true) = spec.stationary_moments();
    assert!((mr - 1.0062).abs() < 1e-3);
    assert!((cov / cov_true - 1.0).abs() < 0.05, "{cov} vs {cov_true}");
    assert!((var_a.sqrt() / var_a_true.sqrt() - 1.0).abs() < 0.05);
}

/// Moment of order `k` of the standard normal truncated at `c`, by Simpson.
fn truncated_moment(k: i32, c: f64) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    let n = 20_000;
    let h = 2.0 * c / n as f64;
    let f = |x: f64| x.powi(k) * (-0.5 * x * x).exp();
    let mut s = f(-c) + f(c);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(-c + i as f64 * h);
    }
    let mut z = 0.0;
    let g = |x: f64| (-0.5 * x * x).exp();
    z += g(-c) + g(c);
    for i in 1..n {
        z += if i % 2 == 1 { 4.0 } else { 2.0 } * g(-c + i as f64 * h);
    }
    s / z
}

#[test]
fn quadrature_is_exact_to_degree_2n_minus_1() {
    let c = 5.0;
    for n in [3, 7, 11] {
        let rule = truncated_normal_rule(0.0, 1.0, c, n).unwrap();
        for k in 0..(2 * n as i32) {
            let q = rule.expect(|x| x.powi(k));
            let exact = truncated_moment(k, c);
            assert!(
                (q - exact).abs() < 1e-10 * exact.abs().max(1.0),
                "n={n} k={k}: {q} vs {exact}"
            );
        }
    }
}

#[test]
fn quadrature_variance_closed_form() {
    let c = 2.0;
    let rule = truncated_normal_rule(1.0, 0.05, c, 7).unwrap();
    let z = Normal::standard();
    let phi = (-0.5 * c * c).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let var = 1.0 - 2.0 * c * phi / (2.0 * z.cdf(c) - 1.0);
    assert!((rule.mean() - 1.0).abs() < 1e-15);
    assert!((rule.expect(|x| (x - 1.0).powi(2)) - 0.0025 * var).abs() < 1e-14);
}

fn row_strategy(n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.01f64..1.0, n), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tauchen_rows_are_distributions(rho in -0.99f64..0.99, sigma in 1e-3f64..2.0, n in 1usize..40) {
        let c = tauchen_ar1(0.3, rho, sigma, n, 3.0).unwrap();
        for i in 0..n {
            let s: f64 = c.row(i).iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
            prop_assert!(c.row(i).iter().all(|&p| p >= 0.0));
        }
    }

    #[test]
    fn yield_matches_eigenvalues(
        (rows, m) in (2usize..=6).prop_flat_map(|n| (row_strategy(n), prop::collection::vec(0.8f64..1.2, n)))
    ) {
        let op = DiscountOperator::new(chain_from(rows), m).unwrap();
        let k = kappa(&op).unwrap();
        prop_assert!((k + eigen_radius(&op).ln()).abs() < 1e-10);
    }

    #[test]
    fn scaling_discount_shifts_yield(
        (rows, m) in (2usize..=6).prop_flat_map(|n| (row_strategy(n), prop::collection::vec(0.8f64..1.2, n))),
        c in 0.5f64..2.0
    ) {
        let op = DiscountOperator::new(chain_from(rows.clone()), m.clone()).unwrap();
        let scaled = DiscountOperator::new(chain_from(rows), m.iter().map(|v| v * c).collect()).unwrap();
        let (k, ks) = (kappa(&op).unwrap(), kappa(&scaled).unwrap());
        prop_assert!((ks - (k - c.ln())).abs() < 1e-10);
    }

    #[test]
    fn yield_between_row_bounds(
        (rows, m) in (2usize..=6).prop_flat_map(|n| (row_strategy(n), prop::collection::vec(0.8f64..1.2, n)))
    ) {
        let op = DiscountOperator::new(chain_from(rows), m).unwrap();
        let e = op.expected_discount();
        let s = spectral_radius(&op).unwrap();
        let lo = e.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = e.iter().cloned().fold(0.0, f64::max);
        prop_assert!(s >= lo * (1.0 - 1e-12) && s <= hi * (1.0 + 1e-12));
    }

    #[test]
    fn quadrature_weights_positive(n in 1usize..15, c in 1.0f64..8.0) {
        let r = truncated_normal_rule(0.0, 1.0, c, n).unwrap();
        prop_assert!((r.weights().iter().sum::<f64>() - 1.0).abs() < 1e-13);
        prop_assert!(r.weights().iter().all(|&w| w > 0.0));
        prop_assert!(r.nodes().iter().all(|x| x.abs() <= c));
        prop_assert!(r.mean().abs() < 1e-13);
    }
}
