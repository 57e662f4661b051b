//! Scans the high-rate output probability of the three-state correlated
//! economy and prints, for each value, the threshold ordering and the two
//! covariances. With `--emit PHI` it prints the run configuration for that
//! value instead.

use storage_core::diagnostics::{correlated_two_rate_spec, scan_correlated};
use storage_core::ModelSpec;

const Y: [f64; 3] = [1.0, 0.9, 1.1];
const RATES: (f64, f64) = (0.98, 1.02);

fn base() -> ModelSpec {
    let mut spec = ModelSpec::default();
    spec.numerics.n_storage_grid = 200;
    spec
}

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if let [flag, phi] = args.as_slice() {
        anyhow::ensure!(flag == "--emit", "usage: covariance_scan [--emit PHI]");
        let spec = correlated_two_rate_spec(&base(), Y, phi.parse()?, RATES)?;
        println!(
            "{}",
            serde_json::to_string_pretty(&serde_json::json!({ "model": spec }))?
        );
        return Ok(());
    }
    let phis: Vec<f64> = (1..20).map(|i| i as f64 * 0.05).collect();
    println!("phi,threshold,ordering_ok,cov_rate_output,cov_rate_price,both_positive");
    for row in scan_correlated(&base(), Y, RATES, &phis)? {
        println!(
            "{:.2},{:.6},{},{:.6e},{:.6e},{}",
            row.phi,
            row.threshold,
            row.ordering_ok,
            row.cov_rate_output,
            row.cov_rate_price,
            row.both_positive()
        );
    }
    Ok(())
}
