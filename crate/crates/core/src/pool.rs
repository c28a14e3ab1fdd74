//! Constant-product pool geometry.
//!
//! The pool holds `x` units of the riskless asset and `y` units of the risky
//! asset with `x * y = p²`. Inventory of `Y` lives on a finite grid
//! `y^{-N} < ... < y^0 = y0 < ... < y^N`, addressed either by a signed offset
//! in `-N..=N` or by a dense position in `0..=2N`.

use alloc::vec::Vec;

use crate::error::{domain, Result};
use crate::Error;

/// Depth and initial inventory of a constant-product pool.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoolSpec {
    depth_sq: f64,
    y0: f64,
}

impl PoolSpec {
    pub fn new(depth_sq: f64, y0: f64) -> Result<Self> {
        if !(depth_sq.is_finite() && depth_sq > 0.0) {
            return Err(domain!("pool depth p² must be positive, got {depth_sq}"));
        }
        if !(y0.is_finite() && y0 > 0.0 && y0 < depth_sq) {
            return Err(domain!("initial inventory y0 must lie in (0, p²), got {y0}"));
        }
        Ok(Self { depth_sq, y0 })
    }

    pub fn depth_sq(&self) -> f64 {
        self.depth_sq
    }

    pub fn y0(&self) -> f64 {
        self.y0
    }

    /// Level function `φ(y) = p² / y`.
    pub fn level_value(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(domain!("level function needs y > 0, got {y}"));
        }
        Ok(self.depth_sq / y)
    }

    /// Marginal exchange rate `Z(y) = -φ'(y) = p² / y²`.
    pub fn marginal_rate(&self, y: f64) -> f64 {
        self.depth_sq / (y * y)
    }

    /// Sell-side rate times trade size for a trade of `delta` at `y`:
    /// `(φ(y) - φ(y + δ)) = p² δ / (y (y + δ))`.
    pub fn sell_notional(&self, y: f64, delta: f64) -> f64 {
        self.depth_sq * delta / (y * (y + delta))
    }

    /// Buy-side rate times trade size: `(φ(y - δ) - φ(y)) = p² δ / (y (y - δ))`.
    pub fn buy_notional(&self, y: f64, delta: f64) -> f64 {
        self.depth_sq * delta / (y * (y - delta))
    }
}

/// How the grid points were generated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridKind {
    /// Marginal rate moves by `dz` per grid step: `Z(y^i) = Z(y0) - dz * i`.
    PriceSpaced { dz: f64 },
    /// Arithmetic progression `y^i = y0 + delta * i`.
    Uniform { delta: f64 },
}

/// Exchange rate and trade size for one side of the pool at a grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideRate {
    pub rate: f64,
    pub delta: f64,
}

impl SideRate {
    /// `Z± Δ±`, the amount of `X` exchanged for one trade (before fees).
    pub fn notional(&self) -> f64 {
        self.rate * self.delta
    }
}

/// The three exchange rates at one grid point. A side is `None` where the
/// grid ends and no trade in that direction is possible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateTriple {
    pub index: i32,
    pub z_marginal: f64,
    pub sell: Option<SideRate>,
    pub buy: Option<SideRate>,
}

impl RateTriple {
    pub fn sell(&self) -> Result<SideRate> {
        self.sell.ok_or(Error::Boundary { index: self.index, side: "sell" })
    }

    pub fn buy(&self) -> Result<SideRate> {
        self.buy.ok_or(Error::Boundary { index: self.index, side: "buy" })
    }
}

/// Immutable inventory grid with precomputed level values and trade sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct AssetGrid {
    spec: PoolSpec,
    kind: GridKind,
    n: usize,
    points: Vec<f64>,
    level_values: Vec<f64>,
}

impl AssetGrid {
    /// Grid on which every step moves the marginal rate by exactly `dz`.
    pub fn price_spaced(spec: PoolSpec, dz: f64, n: usize) -> Result<Self> {
        if !(dz.is_finite() && dz > 0.0) {
            return Err(domain!("price step dz must be positive, got {dz}"));
        }
        let z0 = spec.marginal_rate(spec.y0);
        let lowest = z0 - dz * n as f64;
        if !(lowest > 0.0) {
            return Err(domain!(
                "price grid crosses Z <= 0: Z(y0) - dz*N = {lowest} (Z(y0) = {z0}, dz = {dz}, N = {n})"
            ));
        }
        let points = signed_range(n)
            .map(|i| {
                if i == 0 {
                    spec.y0
                } else {
                    libm::sqrt(spec.depth_sq / (z0 - dz * f64::from(i)))
                }
            })
            .collect();
        Self::from_points(spec, GridKind::PriceSpaced { dz }, n, points)
    }

    /// Grid with constant spacing `delta` around `y0`.
    pub fn uniform(spec: PoolSpec, delta: f64, n: usize) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(domain!("grid spacing must be positive, got {delta}"));
        }
        let lower = spec.y0 - delta * n as f64;
        if !(lower > 0.0) {
            return Err(domain!("uniform grid lower endpoint {lower} is not positive"));
        }
        let points = signed_range(n).map(|i| spec.y0 + delta * f64::from(i)).collect();
        Self::from_points(spec, GridKind::Uniform { delta }, n, points)
    }

    fn from_points(spec: PoolSpec, kind: GridKind, n: usize, points: Vec<f64>) -> Result<Self> {
        if n > i32::MAX as usize / 2 {
            return Err(domain!("grid half-width {n} is too large"));
        }
        if points.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(domain!("grid points are not strictly increasing"));
        }
        if let Some(&top) = points.last() {
            if !(top < spec.depth_sq) {
                return Err(domain!("grid upper endpoint {top} must stay below p²"));
            }
        }
        let level_values = points
            .iter()
            .map(|&y| spec.level_value(y))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { spec, kind, n, points, level_values })
    }

    pub fn spec(&self) -> &PoolSpec {
        &self.spec
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    /// Half-width `N`; offsets run over `-N..=N`.
    pub fn half_width(&self) -> usize {
        self.n
    }

    /// Number of grid points, `2N + 1`.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Dense position of `y0`.
    pub fn center_index(&self) -> usize {
        self.n
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn level_values(&self) -> &[f64] {
        &self.level_values
    }

    /// Signed offsets `-N..=N` in dense order.
    pub fn offsets(&self) -> impl Iterator<Item = i32> {
        signed_range(self.n)
    }

    /// Dense position of a signed offset, or `None` if off the grid.
    pub fn dense(&self, offset: i32) -> Option<usize> {
        let pos = i64::from(offset) + self.n as i64;
        (0..self.points.len() as i64).contains(&pos).then_some(pos as usize)
    }

    pub fn offset(&self, dense: usize) -> i32 {
        dense as i32 - self.n as i32
    }

    pub fn y(&self, offset: i32) -> Option<f64> {
        self.dense(offset).map(|d| self.points[d])
    }

    /// `Δ⁺ = y^{i+1} - y^i` at a dense position; `None` at the top.
    /// Uniform grids report `δ` itself.
    pub fn delta_sell(&self, dense: usize) -> Option<f64> {
        (dense + 1 < self.points.len()).then(|| self.step(dense, dense + 1))
    }

    /// `Δ⁻ = y^i - y^{i-1}` at a dense position; `None` at the bottom.
    pub fn delta_buy(&self, dense: usize) -> Option<f64> {
        (dense > 0 && dense < self.points.len()).then(|| self.step(dense - 1, dense))
    }

    fn step(&self, lo: usize, hi: usize) -> f64 {
        match self.kind {
            GridKind::Uniform { delta } => delta,
            GridKind::PriceSpaced { .. } => self.points[hi] - self.points[lo],
        }
    }

    /// Rates at a signed offset.
    pub fn rates_at(&self, offset: i32) -> Result<RateTriple> {
        let dense = self
            .dense(offset)
            .ok_or_else(|| domain!("offset {offset} is outside -{n}..={n}", n = self.n))?;
        Ok(self.rates_at_dense(dense))
    }

    /// Rates at a dense position. Panics if `dense >= len()`.
    pub fn rates_at_dense(&self, dense: usize) -> RateTriple {
        let y = self.points[dense];
        let sell = self.delta_sell(dense).map(|delta| SideRate {
            rate: self.spec.depth_sq / (y * self.points[dense + 1]),
            delta,
        });
        let buy = self.delta_buy(dense).map(|delta| SideRate {
            rate: self.spec.depth_sq / (y * self.points[dense - 1]),
            delta,
        });
        RateTriple {
            index: self.offset(dense),
            z_marginal: self.spec.marginal_rate(y),
            sell,
            buy,
        }
    }

    /// Marginal rate at a dense position.
    pub fn z_at_dense(&self, dense: usize) -> f64 {
        self.spec.marginal_rate(self.points[dense])
    }
}

fn signed_range(n: usize) -> impl Iterator<Item = i32> {
    let n = n as i32;
    -n..=n
}
