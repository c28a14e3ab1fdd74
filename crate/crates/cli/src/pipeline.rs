//! Solver and simulation stages shared by the subcommands.

use ammfee_core::time::uniform_times;
use ammfee_core::{
    build_generator, constant_fee_level_at, derive_psi, fees_quadratic, integrate_coeffs, limit_fees_k0,
    limit_fees_k0_quadratic, linearize_fees, linearize_rates, optimal_fees, solve_value, AggregateStats,
    AssetGrid, FeeSchedule, LinearizedRates, MarketParams, PathResult, QuadCoeffs, Strategy,
    ValueSurface,
};

use crate::batch::{run_batch_parallel, with_threads};
use crate::config::{RunConfig, StrategyName};
use crate::error::CliError;

pub struct FaSolution {
    pub surface: ValueSurface,
    pub fees: FeeSchedule,
}

/// Value surface and optimal fees at `solver.time_points` uniform times,
/// with the oracle price frozen at `S0`.
pub fn solve_fa(cfg: &RunConfig, params: &MarketParams, grid: &AssetGrid) -> Result<FaSolution, CliError> {
    let times = uniform_times(params.horizon, cfg.time_points()?)?;
    let gen = build_generator(params, grid, params.s0)?;
    let surface = solve_value(&gen, params, &times)?;
    let fees = optimal_fees(&surface, grid)?;
    Ok(FaSolution { surface, fees })
}

pub struct SaSolution {
    pub lin: LinearizedRates,
    pub coeffs: QuadCoeffs,
}

/// Quadratic expansion around the pool's `y0` with trade size `grid.delta`.
pub fn solve_sa(cfg: &RunConfig, params: &MarketParams) -> Result<SaSolution, CliError> {
    let delta = cfg.grid.delta;
    let lin = linearize_rates(cfg.pool_spec()?, cfg.pool.y0, delta, delta)?;
    let coeffs = integrate_coeffs(&derive_psi(params, &lin), params, cfg.ode_steps()?)?;
    Ok(SaSolution { lin, coeffs })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub strategy: StrategyName,
    pub k: f64,
    pub lambda: f64,
    pub stats: AggregateStats,
    pub paths: Option<Vec<PathResult>>,
}

/// One batch per `(k, λ, strategy)`. Every batch uses the same seed, so
/// strategies are compared on common random numbers.
pub fn simulate_table(cfg: &RunConfig) -> Result<Vec<TableRow>, CliError> {
    let sim = cfg.sim_config()?;
    let grid = cfg.grid()?;
    let mut rows = Vec::new();
    for &k in &cfg.sim.k_values {
        for &lambda in &cfg.sim.lambda_values {
            let params = cfg.market_at(k, lambda)?;
            let strategies = build_strategies(cfg, &params, &grid)?;
            for (name, strat) in strategies {
                let batch = with_threads(cfg.sim.threads, || run_batch_parallel(&sim, &strat, &params, &grid))??;
                rows.push(TableRow { strategy: name, k, lambda, stats: batch.stats, paths: batch.paths });
            }
        }
    }
    Ok(rows)
}

fn build_strategies(
    cfg: &RunConfig,
    params: &MarketParams,
    grid: &AssetGrid,
) -> Result<Vec<(StrategyName, Strategy)>, CliError> {
    let needs_fa = cfg.sim.strategies.iter().any(|s| *s != StrategyName::OptimalSa);
    let fa = if needs_fa { Some(solve_fa(cfg, params, grid)?.fees) } else { None };
    let mut out = Vec::new();
    for &name in &cfg.sim.strategies {
        let strat = match (name, &fa) {
            (StrategyName::OptimalFa, Some(fees)) => Strategy::OptimalFa(fees.clone()),
            (StrategyName::LinearFa, Some(fees)) => Strategy::LinearFa(linearize_fees(fees, grid)?),
            (StrategyName::Constant, Some(fees)) => {
                Strategy::Constant(constant_fee_level_at(fees, grid, cfg.sim.constant_time)?)
            }
            (StrategyName::OptimalSa, _) => {
                let sa = solve_sa(cfg, params)?;
                Strategy::OptimalSa { coeffs: sa.coeffs, lin: sa.lin, k: params.k }
            }
            (_, None) => unreachable!("FA schedule is built whenever an FA-based strategy is requested"),
        };
        out.push((name, strat));
    }
    Ok(out)
}

/// `k fee(k)` next to its `k -> 0` limit at one `(t, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitPoint {
    pub k: f64,
    pub t: f64,
    pub i: i32,
    pub y: f64,
    pub scaled_sell: Option<f64>,
    pub scaled_buy: Option<f64>,
    pub limit_sell: Option<f64>,
    pub limit_buy: Option<f64>,
}

impl LimitPoint {
    pub fn gap(&self) -> f64 {
        let d = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(a), Some(b)) => (a - b).abs(),
            _ => 0.0,
        };
        d(self.scaled_sell, self.limit_sell).max(d(self.scaled_buy, self.limit_buy))
    }

    pub fn limit_size(&self) -> f64 {
        self.limit_sell.unwrap_or(0.0).abs().max(self.limit_buy.unwrap_or(0.0).abs())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitSummary {
    pub solver: &'static str,
    pub k: f64,
    pub max_gap: f64,
    pub limit_scale: f64,
}

fn summarize(solver: &'static str, ks: &[f64], points: &[LimitPoint]) -> Vec<LimitSummary> {
    ks.iter()
        .map(|&k| {
            let sel = points.iter().filter(|p| p.k == k);
            LimitSummary {
                solver,
                k,
                max_gap: sel.clone().map(LimitPoint::gap).fold(0.0, f64::max),
                limit_scale: sel.map(LimitPoint::limit_size).fold(0.0, f64::max),
            }
        })
        .collect()
}

fn limit_times(cfg: &RunConfig) -> Vec<f64> {
    let mut ts = cfg.limits.times.clone();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}

/// FA fees scaled by `k` for each `limits.fa_k`, against the `k -> 0` limit.
pub fn fa_limits(cfg: &RunConfig) -> Result<(Vec<LimitPoint>, Vec<LimitSummary>), CliError> {
    let grid = cfg.grid()?;
    let times = limit_times(cfg);
    let base = cfg.market()?;
    let limit = limit_fees_k0(&grid, &base, &times)?;
    let mut points = Vec::new();
    for &k in &cfg.limits.fa_k {
        let params = MarketParams { k, ..base };
        let gen = build_generator(&params, &grid, params.s0)?;
        let scaled = optimal_fees(&solve_value(&gen, &params, &times)?, &grid)?.scaled(k);
        for (j, &t) in times.iter().enumerate() {
            for dense in 0..grid.len() {
                points.push(LimitPoint {
                    k,
                    t,
                    i: grid.offset(dense),
                    y: grid.points()[dense],
                    scaled_sell: scaled.sell(j, dense),
                    scaled_buy: scaled.buy(j, dense),
                    limit_sell: limit.sell(j, dense),
                    limit_buy: limit.buy(j, dense),
                });
            }
        }
    }
    let summary = summarize("fa", &cfg.limits.fa_k, &points);
    Ok((points, summary))
}

/// SA fees scaled by `k` for each `limits.sa_k` on the uniform grid.
pub fn sa_limits(cfg: &RunConfig) -> Result<(Vec<LimitPoint>, Vec<LimitSummary>), CliError> {
    let grid = cfg.uniform_grid()?;
    let times = limit_times(cfg);
    let base = cfg.market()?;
    let mut points = Vec::new();
    for &k in &cfg.limits.sa_k {
        let params = MarketParams { k, ..base };
        let sa = solve_sa(cfg, &params)?;
        for &t in &times {
            for (dense, &y) in grid.points().iter().enumerate() {
                let f = fees_quadratic(&sa.coeffs, &sa.lin, &params, t, y, params.s0)?;
                let lim = limit_fees_k0_quadratic(&sa.lin, y);
                points.push(LimitPoint {
                    k,
                    t,
                    i: grid.offset(dense),
                    y,
                    scaled_sell: Some(k * f.sell),
                    scaled_buy: Some(k * f.buy),
                    limit_sell: Some(lim.sell),
                    limit_buy: Some(lim.buy),
                });
            }
        }
    }
    let summary = summarize("sa", &cfg.limits.sa_k, &points);
    Ok((points, summary))
}
