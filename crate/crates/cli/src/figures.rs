//! One CSV per figure.
//!
//! | file | content |
//! |---|---|
//! | `fig_fa_fees.csv` | exact fees at `figures.t` and their linearization |
//! | `fig_fa_k.csv` | exact fees for each `figures.k_values`, scaled by k, with the k -> 0 limit |
//! | `fig_fa_phi_k{k}.csv` | exact fees at `figures.t` across `figures.phi_values` |
//! | `fig_fa_time_k{k}.csv` | exact fees over time |
//! | `fig_sa_fees.csv` | quadratic-expansion fees at `figures.t` |
//! | `fig_sa_vs_fa.csv` | both solvers on the same uniform grid |
//! | `fig_sa_small_k.csv` | quadratic fees scaled by `figures.sa_small_k` with the k -> 0 limit |
//! | `fig_sa_phi.csv` | quadratic fees across `figures.phi_values` |
//! | `fig_sa_price.csv` | quadratic fees across oracle prices `S0 + figures.s_offsets` |
//! | `fig_value.csv` | `g` from both solvers without volatility and their difference |

use std::path::{Path, PathBuf};

use ammfee_core::{
    build_generator, fees_quadratic, limit_fees_k0, limit_fees_k0_quadratic, linearize_fees, optimal_fees,
    solve_value, AssetGrid, FeeSchedule, MarketParams,
};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::export::{num, opt, strided, CsvFile};
use crate::pipeline::{solve_fa, solve_sa};

/// Exact fees at the single time `t`.
fn fa_snapshot(params: &MarketParams, grid: &AssetGrid, t: f64) -> Result<FeeSchedule, CliError> {
    let gen = build_generator(params, grid, params.s0)?;
    Ok(optimal_fees(&solve_value(&gen, params, &[t])?, grid)?)
}

pub fn write_all(cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let fig = &cfg.figures;
    let base = cfg.market()?;
    let grid = cfg.grid()?;
    let uniform = cfg.uniform_grid()?;
    let t = fig.t;
    let mut written = Vec::new();

    let fees = fa_snapshot(&base, &grid, t)?;
    let linear = linearize_fees(&fees, &grid)?;
    let mut out = CsvFile::create(dir, "fig_fa_fees.csv", &["t", "i", "y", "fee_sell", "fee_buy", "linear_sell", "linear_buy"])?;
    for dense in 0..grid.len() {
        let y = grid.points()[dense];
        let lin = linear.fees_at(0, y);
        out.row(vec![
            num(t),
            grid.offset(dense).to_string(),
            num(y),
            opt(fees.sell(0, dense)),
            opt(fees.buy(0, dense)),
            num(lin.sell),
            num(lin.buy),
        ])?;
    }
    written.push(out.finish()?);

    let limit = limit_fees_k0(&grid, &base, &[t])?;
    let mut out = CsvFile::create(
        dir,
        "fig_fa_k.csv",
        &["k", "i", "y", "fee_sell", "fee_buy", "k_fee_sell", "k_fee_buy", "limit_sell", "limit_buy"],
    )?;
    for &k in &fig.k_values {
        let fees = fa_snapshot(&MarketParams { k, ..base }, &grid, t)?;
        for dense in 0..grid.len() {
            let (p, m) = (fees.sell(0, dense), fees.buy(0, dense));
            out.row(vec![
                num(k),
                grid.offset(dense).to_string(),
                num(grid.points()[dense]),
                opt(p),
                opt(m),
                opt(p.map(|v| k * v)),
                opt(m.map(|v| k * v)),
                opt(limit.sell(0, dense)),
                opt(limit.buy(0, dense)),
            ])?;
        }
    }
    written.push(out.finish()?);

    for &k in &fig.phi_k_values {
        let mut out = CsvFile::create(dir, &format!("fig_fa_phi_k{k}.csv"), &["phi", "i", "y", "fee_sell", "fee_buy"])?;
        for &phi in &fig.phi_values {
            let fees = fa_snapshot(&MarketParams { k, phi, ..base }, &grid, t)?;
            for dense in 0..grid.len() {
                out.row(vec![
                    num(phi),
                    grid.offset(dense).to_string(),
                    num(grid.points()[dense]),
                    opt(fees.sell(0, dense)),
                    opt(fees.buy(0, dense)),
                ])?;
            }
        }
        written.push(out.finish()?);
    }

    for &k in &fig.time_k_values {
        let fees = solve_fa(cfg, &MarketParams { k, ..base }, &grid)?.fees;
        let name = format!("fig_fa_time_k{k}.csv");
        written.push(crate::export::write_fa_fees(dir, &name, &grid, &fees, fig.time_stride)?);
    }

    let sa_params = MarketParams { sigma: fig.sa_sigma, ..base };
    let sa = solve_sa(cfg, &sa_params)?;
    let mut out = CsvFile::create(dir, "fig_sa_fees.csv", &["t", "i", "y", "s", "fee_sell", "fee_buy"])?;
    for (dense, &y) in uniform.points().iter().enumerate() {
        let f = fees_quadratic(&sa.coeffs, &sa.lin, &sa_params, t, y, base.s0)?;
        out.row(vec![num(t), uniform.offset(dense).to_string(), num(y), num(base.s0), num(f.sell), num(f.buy)])?;
    }
    written.push(out.finish()?);

    let fa_uniform = fa_snapshot(&base, &uniform, t)?;
    let mut out = CsvFile::create(dir, "fig_sa_vs_fa.csv", &["t", "i", "y", "sa_sell", "sa_buy", "fa_sell", "fa_buy"])?;
    for (dense, &y) in uniform.points().iter().enumerate() {
        let f = fees_quadratic(&sa.coeffs, &sa.lin, &sa_params, t, y, base.s0)?;
        out.row(vec![
            num(t),
            uniform.offset(dense).to_string(),
            num(y),
            num(f.sell),
            num(f.buy),
            opt(fa_uniform.sell(0, dense)),
            opt(fa_uniform.buy(0, dense)),
        ])?;
    }
    written.push(out.finish()?);

    let k = fig.sa_small_k;
    let small = MarketParams { k, ..sa_params };
    let sa_small = solve_sa(cfg, &small)?;
    let mut out = CsvFile::create(
        dir,
        "fig_sa_small_k.csv",
        &["k", "i", "y", "k_fee_sell", "k_fee_buy", "limit_sell", "limit_buy"],
    )?;
    for (dense, &y) in uniform.points().iter().enumerate() {
        let f = fees_quadratic(&sa_small.coeffs, &sa_small.lin, &small, t, y, base.s0)?;
        let lim = limit_fees_k0_quadratic(&sa_small.lin, y);
        out.row(vec![
            num(k),
            uniform.offset(dense).to_string(),
            num(y),
            num(k * f.sell),
            num(k * f.buy),
            num(lim.sell),
            num(lim.buy),
        ])?;
    }
    written.push(out.finish()?);

    let mut out = CsvFile::create(dir, "fig_sa_phi.csv", &["phi", "i", "y", "fee_sell", "fee_buy"])?;
    for &phi in &fig.phi_values {
        let p = MarketParams { phi, ..sa_params };
        let sol = solve_sa(cfg, &p)?;
        for (dense, &y) in uniform.points().iter().enumerate() {
            let f = fees_quadratic(&sol.coeffs, &sol.lin, &p, t, y, base.s0)?;
            out.row(vec![num(phi), uniform.offset(dense).to_string(), num(y), num(f.sell), num(f.buy)])?;
        }
    }
    written.push(out.finish()?);

    let mut out = CsvFile::create(dir, "fig_sa_price.csv", &["s", "i", "y", "fee_sell", "fee_buy"])?;
    for &ds in &fig.s_offsets {
        let s = base.s0 + ds;
        for (dense, &y) in uniform.points().iter().enumerate() {
            let f = fees_quadratic(&sa.coeffs, &sa.lin, &sa_params, t, y, s)?;
            out.row(vec![num(s), uniform.offset(dense).to_string(), num(y), num(f.sell), num(f.buy)])?;
        }
    }
    written.push(out.finish()?);

    let still = MarketParams { sigma: 0.0, ..base };
    let fa = solve_fa(cfg, &still, &uniform)?.surface;
    let sa0 = solve_sa(cfg, &still)?;
    let mut out = CsvFile::create(dir, "fig_value.csv", &["t", "i", "y", "g_fa", "g_sa", "diff"])?;
    for j in strided(fa.times().len(), fig.time_stride) {
        let tj = fa.times()[j];
        for (dense, &y) in uniform.points().iter().enumerate() {
            let g_fa = fa.g(j, dense);
            let g_sa = sa0.coeffs.eval_g(tj, y, still.s0)?;
            out.row(vec![num(tj), uniform.offset(dense).to_string(), num(y), num(g_fa), num(g_sa), num(g_sa - g_fa)])?;
        }
    }
    written.push(out.finish()?);

    Ok(written)
}
