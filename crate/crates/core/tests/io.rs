mod common;

use common::small;
use proptest::prelude::*;
use std::io::Cursor;
use storage_core::diagnostics::euler_error;
use storage_core::girf::{girf_at, Conditioning, GirfSpec};
use storage_core::io::{
    girf_rows, read_euler_csv, read_girf_csv, read_path_csv, read_solution, write_euler_csv, write_girf_csv,
    write_path_csv, write_solution, Provenance, SolutionFile,
};
use storage_core::simulation::simulate;
use storage_core::solver::{price_at, storage_at};

fn prov(seed: Option<u64>) -> Provenance {
    Provenance {
        config_hash: "ab".repeat(32),
        seed,
    }
}

#[test]
fn solution_round_trips() {
    let (sol, eco) = small();
    let mut buf = vec![];
    write_solution(&mut buf, &sol, prov(None)).unwrap();
    let (back, p) = read_solution(Cursor::new(&buf)).unwrap();
    assert_eq!(p, prov(None));
    assert_eq!(back.x, sol.x);
    assert_eq!(back.p, sol.p);
    assert_eq!(back.d, sol.d);
    assert_eq!(back.pbar_threshold, sol.pbar_threshold);
    assert_eq!(back.xstar, sol.xstar);
    assert_eq!(back.residual_history, sol.residual_history);
    for j in 0..eco.n_states() {
        for t in 0..100 {
            let x = eco.b + 0.03 * t as f64;
            assert_eq!(price_at(&back, x, j).unwrap(), price_at(&sol, x, j).unwrap());
            assert_eq!(storage_at(&back, x, j).unwrap(), storage_at(&sol, x, j).unwrap());
        }
    }
    let mut again = vec![];
    write_solution(&mut again, &back, prov(None)).unwrap();
    assert_eq!(buf, again);
}

#[test]
fn solution_file_is_validated() {
    let (sol, _) = small();
    let mut f = SolutionFile::new(&sol, prov(None));
    f.price.pop();
    assert!(f.clone().into_solution().is_err());
    let mut g = SolutionFile::new(&sol, prov(None));
    g.version = 9;
    assert!(g.into_solution().is_err());
    let json = serde_json::to_string(&SolutionFile::new(&sol, prov(None))).unwrap();
    let extra = json.replacen('{', "{\"surprise\":1,", 1);
    assert!(read_solution(Cursor::new(extra)).is_err());
}

#[test]
fn path_round_trips() {
    let (sol, eco) = small();
    let path = simulate(&sol, &eco, 3000, 200, 8).unwrap();
    let mut buf = vec![];
    write_path_csv(&mut buf, &path, prov(Some(8))).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.lines().nth(1).unwrap() == "t,z_index,R_a,A,Y,X,P,I");
    assert!(text.lines().nth(2).unwrap().starts_with("200,"));
    let (back, p) = read_path_csv(Cursor::new(buf)).unwrap();
    assert_eq!(p.seed, Some(8));
    assert_eq!(back, path);
}

#[test]
fn girf_round_trips() {
    let (sol, eco) = small();
    let g = GirfSpec {
        x0: Conditioning::Value(1.0),
        z0: Conditioning::State(4),
        n_paths: 500,
        horizon: 5,
        ..GirfSpec::default()
    };
    let r = girf_at(&sol, &eco, 1.0, 4, &g).unwrap();
    let mut buf = vec![];
    write_girf_csv(&mut buf, &r, prov(Some(1))).unwrap();
    let (rows, meta) = read_girf_csv(Cursor::new(buf)).unwrap();
    assert_eq!(rows, girf_rows(&r));
    assert_eq!(meta.z0, 4);
    assert_eq!(meta.projection_rule, r.projection_rule);

    let no_vol = girf_at(
        &sol,
        &eco,
        1.0,
        4,
        &GirfSpec {
            volatility: false,
            ..g
        },
    )
    .unwrap();
    let mut buf = vec![];
    write_girf_csv(&mut buf, &no_vol, prov(Some(1))).unwrap();
    let (rows, _) = read_girf_csv(Cursor::new(buf)).unwrap();
    assert!(rows.iter().all(|r| r.irf_vol_pct.is_none()));
}

#[test]
fn euler_round_trips() {
    let (sol, eco) = small();
    let states: Vec<_> = (0..50)
        .map(|i| (eco.b + 0.01 + 0.02 * i as f64, i % eco.n_states()))
        .collect();
    let r = euler_error(&sol, &eco, &states).unwrap();
    let mut buf = vec![];
    write_euler_csv(&mut buf, &r, prov(Some(2))).unwrap();
    let (back, p) = read_euler_csv(Cursor::new(buf)).unwrap();
    assert_eq!(back, r.samples);
    assert_eq!(p.seed, Some(2));
}

#[test]
fn missing_metadata_line_is_an_error() {
    assert!(read_path_csv(Cursor::new("t,z_index\n1,2\n")).is_err());
}

proptest! {
    #[test]
    fn provenance_round_trips(hash in "[0-9a-f]{64}", seed in proptest::option::of(any::<u64>())) {
        let p = Provenance { config_hash: hash, seed };
        let back: Provenance = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        prop_assert_eq!(back, p);
    }
}
