mod config;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use config::{hash_of, RunConfig};
use serde::Serialize;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use storage_core::io::{self, EulerSummary, Provenance};
use storage_core::{diagnostics, girf, model, simulation, solver};

/// Equilibrium solver for the commodity storage model with stochastic
/// interest rates.
#[derive(Parser, Debug)]
#[command(name = "storage-eq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides `run.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Check the existence conditions.
    Check,
    /// Solve for the equilibrium rules and write `solution.json`.
    Solve,
    /// Simulate a path from the solution.
    Simulate,
    /// Price moments of a stationary sample.
    Moments,
    /// Generalised impulse responses to a rate impulse.
    Irf,
    /// Constant-rate one-period rate shock.
    Mit,
    /// Euler errors and structural property checks.
    Diagnose,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Usage(anyhow::Error),
    Model(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Model(_) => 1,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Usage(e) | Failure::Model(e) => e,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Model(e)
    }
}

impl From<storage_core::Error> for Failure {
    fn from(e: storage_core::Error) -> Self {
        Failure::Model(e.into())
    }
}

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
    seed: u64,
    config_hash: String,
    model_hash: String,
}

impl Ctx {
    fn provenance(&self, seeded: bool) -> Provenance {
        Provenance {
            config_hash: self.config_hash.clone(),
            seed: seeded.then_some(self.seed),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn economy(&self) -> Result<model::Economy, Failure> {
        Ok(model::build_economy(&self.cfg.model)?)
    }

    fn load_solution(&self) -> Result<solver::EquilibriumSolution, Failure> {
        let path = self.path("solution.json");
        let file = File::open(&path)
            .with_context(|| format!("no solution at {}; run `solve` first", path.display()))?;
        let (sol, prov) = io::read_solution(std::io::BufReader::new(file))?;
        if prov.config_hash != self.model_hash {
            return Err(Failure::Model(anyhow!(
                "{} was solved for a different model (hash {})",
                path.display(),
                prov.config_hash
            )));
        }
        Ok(sol)
    }
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    provenance: Provenance,
    #[serde(flatten)]
    body: &'a T,
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, Failure> {
    let path = path.ok_or_else(|| Failure::Usage(anyhow!("--config is required")))?;
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::Usage)?;
    serde_json::from_str(&text)
        .with_context(|| format!("invalid configuration {}", path.display()))
        .map_err(Failure::Usage)
}

#[derive(Serialize)]
struct CheckReport {
    passed: bool,
    kappa: f64,
    delta: f64,
    discounting_ok: bool,
    validity_ok: bool,
    min_margin: f64,
    margins: Vec<f64>,
}

fn cmd_check(ctx: &Ctx) -> Result<(), Failure> {
    let economy = ctx.economy()?;
    let r = model::validate(&economy);
    let report = CheckReport {
        passed: r.passed(),
        kappa: r.kappa,
        delta: r.delta,
        discounting_ok: r.discounting_ok,
        validity_ok: r.validity_ok,
        min_margin: r.margins.iter().copied().fold(f64::INFINITY, f64::min),
        margins: r.margins.clone(),
    };
    println!(
        "kappa = {:.6e}, delta = {}, kappa + delta = {:.6e}, min validity margin = {:.6e}",
        r.kappa,
        r.delta,
        r.kappa + r.delta,
        report.min_margin
    );
    write_json(
        &ctx.path("check.json"),
        &Stamped {
            provenance: ctx.provenance(false),
            body: &report,
        },
    )?;
    if r.passed() {
        println!("check passed");
        Ok(())
    } else {
        Err(Failure::Model(
            r.require()
                .err()
                .map_or_else(|| anyhow!("check failed"), Into::into),
        ))
    }
}

fn cmd_solve(ctx: &Ctx) -> Result<(), Failure> {
    let economy = ctx.economy()?;
    let mut opts = solver::SolverOptions::from_spec(&ctx.cfg.model)?;
    opts.initial = ctx.cfg.run.solve.initial;
    let sol = solver::solve_egm(&economy, &opts)?;
    let prov = Provenance {
        config_hash: ctx.model_hash.clone(),
        seed: None,
    };
    let mut w = create(&ctx.path("solution.json"))?;
    io::write_solution(&mut w, &sol, prov)?;
    w.flush().map_err(anyhow::Error::from)?;
    let mut log = create(&ctx.path("convergence.csv"))?;
    writeln!(log, "iteration,residual").map_err(anyhow::Error::from)?;
    for (i, r) in sol.residual_history.iter().enumerate() {
        writeln!(log, "{},{}", i + 1, r).map_err(anyhow::Error::from)?;
    }
    log.flush().map_err(anyhow::Error::from)?;
    println!(
        "converged in {} iterations (residual {:.3e}); wrote {}",
        sol.iterations,
        sol.final_residual,
        ctx.path("solution.json").display()
    );
    Ok(())
}

fn cmd_simulate(ctx: &Ctx) -> Result<(), Failure> {
    let economy = ctx.economy()?;
    let sol = ctx.load_solution()?;
    let b = ctx.cfg.run.simulate;
    let path = simulation::simulate(&sol, &economy, b.t_total, b.burn, ctx.seed)?;
    let mut w = create(&ctx.path("path.csv"))?;
    io::write_path_csv(&mut w, &path, ctx.provenance(true))?;
    w.flush().map_err(anyhow::Error::from)?;
    println!(
        "wrote {} periods to {}",
        path.len(),
        ctx.path("path.csv").display()
    );
    Ok(())
}

fn cmd_moments(ctx: &Ctx) -> Result<(), Failure> {
    let economy = ctx.economy()?;
    let sol = ctx.load_solution()?;
    let b = ctx.cfg.run.moments;
    let path = simulation::simulate(&sol, &economy, b.t_total, b.burn, ctx.seed)?;
    let m = simulation::moments(&path)?;
    println!(
        "cv = {:.4}, ac1 = {}, skew = {}",
        m.cv,
        m.ac1.map_or("n/a".into(), |v| format!("{v:.4}")),
        m.skew.map_or("n/a".into(), |v| format!("{v:.4}"))
    );
    write_json(
        &ctx.path("moments.json"),
        &Stamped {
            provenance: ctx.provenance(true),
            body: &m,
        },
    )?;
    Ok(())
}

fn cmd_irf(ctx: &Ctx) -> Result<(), Failure> {
    let economy = ctx.economy()?;
    let sol = ctx.load_solution()?;
    let g = girf::girf(&sol, &economy, &ctx.cfg.run.irf.spec(ctx.seed))?;
    let mut w = create(&ctx.path("irf.csv"))?;
    io::write_girf_csv(&mut w, &g, ctx.provenance(true))?;
    w.flush().map_err(anyhow::Error::from)?;
    write_json(
        &ctx.path("irf.json"),
        &Stamped {
            provenance: ctx.provenance(true),
            body: &g,
        },
    )?;
    println!(
        "impact: price {:+.4}%, inventory {:+.4}%",
        g.irf_price_pct[0], g.irf_inventory_pct[0]
    );
    Ok(())
}

fn cmd_mit(ctx: &Ctx) -> Result<(), Failure> {
    let r = girf::mit_irf(&ctx.cfg.model, &ctx.cfg.run.mit.spec(ctx.seed))?;
    let mut w = create(&ctx.path("mit.csv"))?;
    io::write_girf_csv(&mut w, &r.irf, ctx.provenance(true))?;
    w.flush().map_err(anyhow::Error::from)?;
    write_json(
        &ctx.path("mit.json"),
        &Stamped {
            provenance: ctx.provenance(true),
            body: &r,
        },
    )?;
    println!(
        "ordering violations: impact {}, later {}",
        r.impact_violations, r.later_violations
    );
    Ok(())
}

fn cmd_diagnose(ctx: &Ctx) -> Result<(), Failure> {
    let economy = ctx.economy()?;
    let sol = ctx.load_solution()?;
    let d = ctx.cfg.run.diagnostics;
    if d.euler {
        let r = diagnostics::euler_error_sampled(&sol, &economy, ctx.seed)?;
        let mut w = create(&ctx.path("euler.csv"))?;
        io::write_euler_csv(&mut w, &r, ctx.provenance(true))?;
        w.flush().map_err(anyhow::Error::from)?;
        write_json(
            &ctx.path("euler.json"),
            &EulerSummary::new(&r, ctx.provenance(true)),
        )?;
        println!(
            "Euler error: max log10 {:.3}, 95th percentile {:.3}",
            r.max_log10, r.pct95_log10
        );
    }
    if d.properties {
        let report = diagnostics::check_all(&sol, &economy, &d.mesh, ctx.seed)?;
        for c in &report.checks {
            println!(
                "{} {} (worst {:.3e}, {} of {})",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.worst,
                c.violations,
                c.count
            );
        }
        write_json(
            &ctx.path("properties.json"),
            &Stamped {
                provenance: ctx.provenance(true),
                body: &report,
            },
        )?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.into()))?;
    }
    let cfg = load_config(cli.config.as_deref())?;
    fs::create_dir_all(&cli.out)
        .with_context(|| format!("cannot create {}", cli.out.display()))
        .map_err(Failure::Usage)?;
    let ctx = Ctx {
        seed: cli.seed.unwrap_or(cfg.run.seed),
        config_hash: hash_of(&cfg),
        model_hash: hash_of(&cfg.model),
        out: cli.out.clone(),
        cfg,
    };
    match cli.command {
        Command::Check => cmd_check(&ctx),
        Command::Solve => cmd_solve(&ctx),
        Command::Simulate => cmd_simulate(&ctx),
        Command::Moments => cmd_moments(&ctx),
        Command::Irf => cmd_irf(&ctx),
        Command::Mit => cmd_mit(&ctx),
        Command::Diagnose => cmd_diagnose(&ctx),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
