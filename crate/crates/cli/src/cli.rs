use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::export::{num, opt, strided, write_fa_fees, write_fa_value, write_grid, write_sa_coeffs, CsvFile};
use crate::pipeline::{self, LimitPoint, TableRow};

/// Dynamic fee solvers and simulator for constant-product pools.
#[derive(Debug, Parser)]
#[command(name = "ammfee", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact value surface and optimal fees: grid.csv, fees_fa.csv, value_fa.csv.
    SolveFa(Common),
    /// Quadratic-expansion coefficients and fees: grid_sa.csv, coeffs_sa.csv, fees_sa.csv.
    SolveSa(Common),
    /// Scaled fees against their k -> 0 limits for both solvers.
    Limits(Common),
    /// Monte Carlo strategy comparison: table.csv.
    Simulate(Common),
    /// One CSV per figure.
    Figures(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides output.dir).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Simulation seed (overrides sim.seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Paths per batch (overrides sim.n_paths).
    #[arg(long)]
    paths: Option<u64>,
    /// Time steps per path (overrides sim.n_steps).
    #[arg(long)]
    steps: Option<u32>,
}

impl Common {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(dir) = &self.out_dir {
            cfg.output.dir = dir.clone();
        }
        if let Some(seed) = self.seed {
            cfg.sim.seed = seed;
        }
        if let Some(n) = self.paths {
            cfg.sim.n_paths = n;
        }
        if let Some(n) = self.steps {
            cfg.sim.n_steps = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code: 0 on success, 2 for usage or config errors, 3 for
/// numerical failures, 1 for IO errors.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli.command) {
        Ok(written) => {
            for path in written {
                println!("{}", path.display());
            }
            0
        }
        Err(e) => {
            eprintln!("ammfee: {e}");
            e.exit_code()
        }
    }
}

fn run(command: Command) -> Result<Vec<PathBuf>, CliError> {
    match command {
        Command::SolveFa(c) => solve_fa(&c.load()?),
        Command::SolveSa(c) => solve_sa(&c.load()?),
        Command::Limits(c) => limits(&c.load()?),
        Command::Simulate(c) => simulate(&c.load()?),
        Command::Figures(c) => {
            let cfg = c.load()?;
            crate::figures::write_all(&cfg, &cfg.output.dir)
        }
    }
}

fn solve_fa(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let dir = &cfg.output.dir;
    let grid = cfg.grid()?;
    let sol = pipeline::solve_fa(cfg, &cfg.market()?, &grid)?;
    Ok(vec![
        write_grid(dir, "grid.csv", &grid)?,
        write_fa_fees(dir, "fees_fa.csv", &grid, &sol.fees, 1)?,
        write_fa_value(dir, "value_fa.csv", &grid, &sol.surface, 1)?,
    ])
}

fn solve_sa(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let dir = &cfg.output.dir;
    let grid = cfg.uniform_grid()?;
    let params = cfg.market()?;
    let sol = pipeline::solve_sa(cfg, &params)?;
    let mut written = vec![write_grid(dir, "grid_sa.csv", &grid)?, write_sa_coeffs(dir, "coeffs_sa.csv", &sol.coeffs)?];
    let mut out = CsvFile::create(dir, "fees_sa.csv", &["t", "y", "s", "fee_sell", "fee_buy"])?;
    for j in strided(sol.coeffs.len(), cfg.figures.time_stride) {
        for &y in grid.points() {
            let f = sol.coeffs.fees_at(j, &sol.lin, params.k, y, params.s0);
            out.row(vec![num(sol.coeffs.times[j]), num(y), num(params.s0), num(f.sell), num(f.buy)])?;
        }
    }
    written.push(out.finish()?);
    Ok(written)
}

fn write_limit_points(dir: &Path, name: &str, points: &[LimitPoint]) -> Result<PathBuf, CliError> {
    let mut out = CsvFile::create(
        dir,
        name,
        &["k", "t", "i", "y", "k_fee_sell", "k_fee_buy", "limit_sell", "limit_buy"],
    )?;
    for p in points {
        out.row(vec![
            num(p.k),
            num(p.t),
            p.i.to_string(),
            num(p.y),
            opt(p.scaled_sell),
            opt(p.scaled_buy),
            opt(p.limit_sell),
            opt(p.limit_buy),
        ])?;
    }
    out.finish()
}

fn limits(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let dir = &cfg.output.dir;
    let (fa_points, fa_summary) = pipeline::fa_limits(cfg)?;
    let (sa_points, sa_summary) = pipeline::sa_limits(cfg)?;
    let mut written = vec![
        write_limit_points(dir, "limits_fa.csv", &fa_points)?,
        write_limit_points(dir, "limits_sa.csv", &sa_points)?,
    ];
    let mut out = CsvFile::create(dir, "limits_summary.csv", &["solver", "k", "max_gap", "limit_scale"])?;
    for s in fa_summary.iter().chain(&sa_summary) {
        out.row(vec![s.solver.to_string(), num(s.k), num(s.max_gap), num(s.limit_scale)])?;
    }
    written.push(out.finish()?);
    Ok(written)
}

fn simulate(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let dir = &cfg.output.dir;
    let rows = pipeline::simulate_table(cfg)?;
    let mut written = vec![write_table(dir, cfg, &rows)?];
    for row in &rows {
        if let Some(paths) = &row.paths {
            let name = format!("paths_{}_k{}_lambda{}.csv", row.strategy.as_str(), row.k, row.lambda);
            let mut out = CsvFile::create(dir, &name, &["path_id", "fees", "n_sell", "n_buy", "qv", "terminal_index"])?;
            for p in paths {
                out.row(vec![
                    p.path_id.to_string(),
                    num(p.fees_collected),
                    p.n_sell.to_string(),
                    p.n_buy.to_string(),
                    num(p.qv),
                    p.terminal_index.to_string(),
                ])?;
            }
            written.push(out.finish()?);
        }
    }
    Ok(written)
}

pub fn write_table(dir: &Path, cfg: &RunConfig, rows: &[TableRow]) -> Result<PathBuf, CliError> {
    let mut out = CsvFile::create(
        dir,
        "table.csv",
        &[
            "strategy", "k", "lambda", "fees_mean", "fees_se", "sell_mean", "buy_mean", "qv_mean", "n_paths", "n_steps",
            "seed",
        ],
    )?;
    for r in rows {
        out.row(vec![
            r.strategy.as_str().to_string(),
            num(r.k),
            num(r.lambda),
            num(r.stats.fees.mean),
            num(r.stats.fees.std_err),
            num(r.stats.sells.mean),
            num(r.stats.buys.mean),
            num(r.stats.qv.mean),
            r.stats.n_paths().to_string(),
            cfg.sim.n_steps.to_string(),
            cfg.sim.seed.to_string(),
        ])?;
    }
    out.finish()
}
