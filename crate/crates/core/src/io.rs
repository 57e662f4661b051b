//! File formats: solution JSON, and CSV exports of paths, impulse responses
//! and Euler errors with a `#`-prefixed JSON metadata line.

use crate::diagnostics::{EulerErrorReport, EulerSample};
use crate::error::{Error, Result};
use crate::girf::GirfResult;
use crate::model::DemandCurve;
use crate::simulation::SimulationResult;
use crate::solver::{solution_from_nodes, EquilibriumSolution, StorageGrid};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Read, Write};

pub const SOLUTION_FORMAT: &str = "storage-solution";
pub const SOLUTION_VERSION: u32 = 1;

/// Where an artifact came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    /// SHA-256 of the canonical configuration JSON, hex encoded.
    pub config_hash: String,
    pub seed: Option<u64>,
}

fn fmt_err(e: impl std::fmt::Display) -> Error {
    Error::Format(e.to_string())
}

/// On-disk form of an [`EquilibriumSolution`]. Matrices are row-major with
/// one row per storage node and one column per exogenous state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionFile {
    pub format: String,
    pub version: u32,
    pub provenance: Provenance,
    pub n_storage: usize,
    pub n_states: usize,
    pub storage_grid: Vec<f64>,
    pub availability: Vec<f64>,
    pub price: Vec<f64>,
    pub pbar_threshold: Vec<f64>,
    /// `null` where no disposal threshold exists.
    pub xstar: Vec<Option<f64>>,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub demand: DemandCurve,
    pub b: f64,
}

fn row_major(cols: &[Vec<f64>]) -> Vec<f64> {
    let k = cols.first().map_or(0, Vec::len);
    (0..k).flat_map(|s| cols.iter().map(move |c| c[s])).collect()
}

fn columns(flat: &[f64], k: usize, n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|j| (0..k).map(|s| flat[s * n + j]).collect())
        .collect()
}

impl SolutionFile {
    pub fn new(sol: &EquilibriumSolution, provenance: Provenance) -> Self {
        Self {
            format: SOLUTION_FORMAT.into(),
            version: SOLUTION_VERSION,
            provenance,
            n_storage: sol.grid.len(),
            n_states: sol.n_states(),
            storage_grid: sol.grid.points().to_vec(),
            availability: row_major(&sol.x),
            price: row_major(&sol.p),
            pbar_threshold: sol.pbar_threshold.clone(),
            xstar: sol.xstar.iter().map(|&v| v.is_finite().then_some(v)).collect(),
            iterations: sol.iterations,
            residual_history: sol.residual_history.clone(),
            demand: sol.demand,
            b: sol.b,
        }
    }

    pub fn into_solution(self) -> Result<EquilibriumSolution> {
        if self.format != SOLUTION_FORMAT || self.version != SOLUTION_VERSION {
            return Err(Error::Format(format!(
                "expected {SOLUTION_FORMAT} version {SOLUTION_VERSION}, found {} version {}",
                self.format, self.version
            )));
        }
        let (k, n) = (self.n_storage, self.n_states);
        let sized = self.storage_grid.len() == k
            && self.availability.len() == k * n
            && self.price.len() == k * n
            && self.pbar_threshold.len() == n
            && self.xstar.len() == n;
        if !sized {
            return Err(Error::Format(
                "array lengths do not match n_storage x n_states".into(),
            ));
        }
        Ok(solution_from_nodes(
            StorageGrid::from_points(self.storage_grid)?,
            columns(&self.availability, k, n),
            columns(&self.price, k, n),
            self.pbar_threshold,
            self.xstar
                .into_iter()
                .map(|v| v.unwrap_or(f64::INFINITY))
                .collect(),
            self.iterations,
            self.residual_history,
            self.demand,
            self.b,
        ))
    }
}

pub fn write_solution<W: Write>(w: W, sol: &EquilibriumSolution, provenance: Provenance) -> Result<()> {
    serde_json::to_writer_pretty(w, &SolutionFile::new(sol, provenance)).map_err(fmt_err)
}

pub fn read_solution<R: Read>(r: R) -> Result<(EquilibriumSolution, Provenance)> {
    let file: SolutionFile = serde_json::from_reader(r).map_err(fmt_err)?;
    let prov = file.provenance.clone();
    Ok((file.into_solution()?, prov))
}

fn write_meta<W: Write, T: Serialize>(w: &mut W, meta: &T) -> Result<()> {
    writeln!(w, "# {}", serde_json::to_string(meta).map_err(fmt_err)?)?;
    Ok(())
}

/// Splits a `#` metadata line off a CSV stream.
fn read_meta<R: Read, T: for<'de> Deserialize<'de>>(r: R) -> Result<(T, csv::Reader<BufReader<R>>)> {
    let mut br = BufReader::new(r);
    let mut line = String::new();
    br.read_line(&mut line)?;
    let json = line
        .strip_prefix("# ")
        .ok_or_else(|| Error::Format("missing metadata line".into()))?;
    let meta = serde_json::from_str(json.trim_end()).map_err(fmt_err)?;
    Ok((meta, csv::Reader::from_reader(br)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathMeta {
    pub provenance: Provenance,
    pub t_total: usize,
    pub burn: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct PathRow {
    t: usize,
    z_index: usize,
    #[serde(rename = "R_a")]
    r_a: f64,
    #[serde(rename = "A")]
    a: f64,
    #[serde(rename = "Y")]
    y: f64,
    #[serde(rename = "X")]
    x: f64,
    #[serde(rename = "P")]
    p: f64,
    #[serde(rename = "I")]
    i: f64,
}

/// Writes a path with columns `t, z_index, R_a, A, Y, X, P, I`.
pub fn write_path_csv<W: Write>(mut w: W, path: &SimulationResult, provenance: Provenance) -> Result<()> {
    let meta = PathMeta {
        provenance,
        t_total: path.t_total,
        burn: path.burn,
    };
    write_meta(&mut w, &meta)?;
    let mut cw = csv::Writer::from_writer(w);
    for k in 0..path.len() {
        cw.serialize(PathRow {
            t: path.burn + k,
            z_index: path.z_index[k],
            r_a: path.rate_annual[k],
            a: path.activity[k],
            y: path.y[k],
            x: path.x[k],
            p: path.p[k],
            i: path.i[k],
        })
        .map_err(fmt_err)?;
    }
    cw.flush()?;
    Ok(())
}

pub fn read_path_csv<R: Read>(r: R) -> Result<(SimulationResult, Provenance)> {
    let (meta, mut cr): (PathMeta, _) = read_meta(r)?;
    let mut out = SimulationResult {
        x: vec![],
        p: vec![],
        i: vec![],
        y: vec![],
        z_index: vec![],
        rate_annual: vec![],
        activity: vec![],
        seed: meta.provenance.seed.unwrap_or(0),
        t_total: meta.t_total,
        burn: meta.burn,
    };
    for row in cr.deserialize() {
        let row: PathRow = row.map_err(fmt_err)?;
        out.x.push(row.x);
        out.p.push(row.p);
        out.i.push(row.i);
        out.y.push(row.y);
        out.z_index.push(row.z_index);
        out.rate_annual.push(row.r_a);
        out.activity.push(row.a);
    }
    Ok((out, meta.provenance))
}

/// One row of the impulse-response CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GirfRow {
    pub h: usize,
    pub irf_price_pct: f64,
    pub irf_inventory_pct: f64,
    pub irf_vol_pct: Option<f64>,
    pub baseline_price: f64,
    pub shocked_price: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GirfMeta {
    pub provenance: Provenance,
    pub x0: f64,
    pub z0: usize,
    pub shock_bp: f64,
    pub horizon: usize,
    pub n_paths: usize,
    pub projection_rule: String,
    pub draw_sharing: String,
}

pub fn girf_rows(g: &GirfResult) -> Vec<GirfRow> {
    (0..g.irf_price.len())
        .map(|h| GirfRow {
            h,
            irf_price_pct: g.irf_price_pct[h],
            irf_inventory_pct: g.irf_inventory_pct[h],
            irf_vol_pct: g.irf_volatility_pct.as_ref().map(|v| v[h]),
            baseline_price: g.baseline_price[h],
            shocked_price: g.shocked_price[h],
        })
        .collect()
}

/// Writes columns `h, irf_price_pct, irf_inventory_pct, irf_vol_pct,
/// baseline_price, shocked_price`; the volatility column is empty when not
/// computed.
pub fn write_girf_csv<W: Write>(mut w: W, g: &GirfResult, provenance: Provenance) -> Result<()> {
    let meta = GirfMeta {
        provenance,
        x0: g.x0,
        z0: g.z0,
        shock_bp: g.shock_bp,
        horizon: g.horizon,
        n_paths: g.n_paths,
        projection_rule: g.projection_rule.clone(),
        draw_sharing: g.draw_sharing.clone(),
    };
    write_meta(&mut w, &meta)?;
    let mut cw = csv::Writer::from_writer(w);
    for row in girf_rows(g) {
        cw.serialize(row).map_err(fmt_err)?;
    }
    cw.flush()?;
    Ok(())
}

pub fn read_girf_csv<R: Read>(r: R) -> Result<(Vec<GirfRow>, GirfMeta)> {
    let (meta, mut cr): (GirfMeta, _) = read_meta(r)?;
    let rows = cr
        .deserialize()
        .collect::<std::result::Result<Vec<GirfRow>, _>>()
        .map_err(fmt_err)?;
    Ok((rows, meta))
}

/// Summary written next to the Euler-error samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulerSummary {
    pub provenance: Provenance,
    pub n: usize,
    pub max_log10: f64,
    pub pct95_log10: f64,
    pub max_log10_level: f64,
    pub pct95_log10_level: f64,
}

impl EulerSummary {
    pub fn new(r: &EulerErrorReport, provenance: Provenance) -> Self {
        Self {
            provenance,
            n: r.samples.len(),
            max_log10: r.max_log10,
            pct95_log10: r.pct95_log10,
            max_log10_level: r.max_log10_level,
            pct95_log10_level: r.pct95_log10_level,
        }
    }
}

/// Writes columns `x, z, ee, ee_level`.
pub fn write_euler_csv<W: Write>(mut w: W, r: &EulerErrorReport, provenance: Provenance) -> Result<()> {
    write_meta(&mut w, &provenance)?;
    let mut cw = csv::Writer::from_writer(w);
    for s in &r.samples {
        cw.serialize(s).map_err(fmt_err)?;
    }
    cw.flush()?;
    Ok(())
}

pub fn read_euler_csv<R: Read>(r: R) -> Result<(Vec<EulerSample>, Provenance)> {
    let (prov, mut cr): (Provenance, _) = read_meta(r)?;
    let rows = cr
        .deserialize()
        .collect::<std::result::Result<Vec<EulerSample>, _>>()
        .map_err(fmt_err)?;
    Ok((rows, prov))
}
