#![allow(dead_code)]

use ammfee_core::{AssetGrid, MarketParams, PoolSpec};

pub fn pool() -> PoolSpec {
    PoolSpec::new(1e8, 1000.0).unwrap()
}

/// Rate-step grid: `Z` moves by 0.1 per trade, 41 points.
pub fn price_grid() -> AssetGrid {
    AssetGrid::price_spaced(pool(), 0.1, 20).unwrap()
}

/// `y = 1000 + 0.5 i`, `i = -20..20`.
pub fn uniform_grid() -> AssetGrid {
    AssetGrid::uniform(pool(), 0.5, 20).unwrap()
}

pub fn params(k: f64, lambda: f64) -> MarketParams {
    MarketParams { k, lambda_sell: lambda, lambda_buy: lambda, ..MarketParams::default() }
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
