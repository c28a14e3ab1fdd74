//! Order flow: fee-adjusted exchange rates, controlled intensities and the
//! inventory penalty.

use crate::error::{domain, Result};
use crate::pool::RateTriple;
use crate::Error;

/// Default cap on intensity exponents.
pub const DEFAULT_EXPONENT_CAP: f64 = 50.0;

/// Market and control-problem parameters.
///
/// `Default` gives the constant-oracle base case: `λ± = 50`, `k = 2`,
/// `ζ = 0`, `S0 = 100`, `σ = 0`, `φ = 0`, `T = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketParams {
    /// Baseline intensity of sells into the pool, `λ⁺`.
    pub lambda_sell: f64,
    /// Baseline intensity of buys from the pool, `λ⁻`.
    pub lambda_buy: f64,
    /// Exponential decay of intensity in mispricing.
    pub k: f64,
    /// Half-spread of the external venue.
    pub zeta: f64,
    /// Initial oracle price.
    pub s0: f64,
    /// Oracle volatility (arithmetic Brownian motion).
    pub sigma: f64,
    /// Weight of the quadratic penalty `φ (Z(y) - S)²`.
    pub phi: f64,
    /// Horizon `T`.
    pub horizon: f64,
    /// Intensity exponents above this are rejected.
    pub exponent_cap: f64,
}

impl Default for MarketParams {
    fn default() -> Self {
        Self {
            lambda_sell: 50.0,
            lambda_buy: 50.0,
            k: 2.0,
            zeta: 0.0,
            s0: 100.0,
            sigma: 0.0,
            phi: 0.0,
            horizon: 1.0,
            exponent_cap: DEFAULT_EXPONENT_CAP,
        }
    }
}

impl MarketParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("lambda_sell", self.lambda_sell),
            ("lambda_buy", self.lambda_buy),
            ("k", self.k),
            ("zeta", self.zeta),
            ("s0", self.s0),
            ("sigma", self.sigma),
            ("phi", self.phi),
            ("horizon", self.horizon),
            ("exponent_cap", self.exponent_cap),
        ];
        if let Some((name, v)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(domain!("{name} must be finite, got {v}"));
        }
        let nonneg = [
            ("lambda_sell", self.lambda_sell),
            ("lambda_buy", self.lambda_buy),
            ("zeta", self.zeta),
            ("sigma", self.sigma),
            ("phi", self.phi),
        ];
        if let Some((name, v)) = nonneg.iter().find(|(_, v)| *v < 0.0) {
            return Err(domain!("{name} must be >= 0, got {v}"));
        }
        if !(self.k > 0.0) {
            return Err(domain!("k must be > 0, got {}", self.k));
        }
        if !(self.horizon > 0.0) {
            return Err(domain!("horizon must be > 0, got {}", self.horizon));
        }
        if !(self.exponent_cap > 0.0) {
            return Err(domain!("exponent_cap must be > 0, got {}", self.exponent_cap));
        }
        Ok(())
    }

    /// `exp(x)` with `x` checked against the exponent cap.
    pub fn guarded_exp(&self, exponent: f64) -> Result<f64> {
        if exponent.is_nan() || exponent > self.exponent_cap {
            return Err(Error::ExponentOverflow { exponent, cap: self.exponent_cap });
        }
        Ok(libm::exp(exponent))
    }
}

/// Proportional fees on selling into (`sell`, 𝔭) and buying from (`buy`, 𝔪)
/// the pool. Negative fees are rebates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FeePair {
    pub sell: f64,
    pub buy: f64,
}

impl FeePair {
    pub fn new(sell: f64, buy: f64) -> Self {
        Self { sell, buy }
    }

    pub fn constant(c: f64) -> Self {
        Self { sell: c, buy: c }
    }
}

/// Cumulative fees collected by the venue, in units of `X`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CashAccount {
    pub value: f64,
}

impl CashAccount {
    pub fn credit(&mut self, amount: f64) {
        self.value += amount;
    }
}

/// Taker-facing rates `((1 - 𝔭) Z₊, (1 + 𝔪) Z₋)` for the sides that exist.
pub fn effective_rates(rates: &RateTriple, fees: FeePair) -> (Option<f64>, Option<f64>) {
    (
        rates.sell.map(|s| (1.0 - fees.sell) * s.rate),
        rates.buy.map(|b| (1.0 + fees.buy) * b.rate),
    )
}

/// Exponent of the sell intensity, `k ((1 - 𝔭) Z₊ - (s + ζ)) Δ⁺`.
pub fn sell_exponent(params: &MarketParams, rates: &RateTriple, s: f64, fee_sell: f64) -> Result<f64> {
    let side = rates.sell()?;
    Ok(params.k * ((1.0 - fee_sell) * side.rate - (s + params.zeta)) * side.delta)
}

/// Exponent of the buy intensity, `-k ((1 + 𝔪) Z₋ - (s - ζ)) Δ⁻`.
pub fn buy_exponent(params: &MarketParams, rates: &RateTriple, s: f64, fee_buy: f64) -> Result<f64> {
    let side = rates.buy()?;
    Ok(-params.k * ((1.0 + fee_buy) * side.rate - (s - params.zeta)) * side.delta)
}

/// Intensity of sells into the pool. Zero at the top of the grid.
pub fn sell_intensity(params: &MarketParams, rates: &RateTriple, s: f64, fee_sell: f64) -> Result<f64> {
    if rates.sell.is_none() {
        return Ok(0.0);
    }
    let x = sell_exponent(params, rates, s, fee_sell)?;
    Ok(params.lambda_sell * params.guarded_exp(x)?)
}

/// Intensity of buys from the pool. Zero at the bottom of the grid.
pub fn buy_intensity(params: &MarketParams, rates: &RateTriple, s: f64, fee_buy: f64) -> Result<f64> {
    if rates.buy.is_none() {
        return Ok(0.0);
    }
    let x = buy_exponent(params, rates, s, fee_buy)?;
    Ok(params.lambda_buy * params.guarded_exp(x)?)
}

/// Running penalty `φ (Z - s)²`.
pub fn penalty(params: &MarketParams, z_marginal: f64, s: f64) -> f64 {
    let gap = z_marginal - s;
    params.phi * gap * gap
}
