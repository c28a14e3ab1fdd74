//! Monte Carlo comparison of fee strategies.
//!
//! Paths are simulated on a uniform time grid. Each step moves the oracle
//! price by a Gaussian increment, asks the strategy for a fee pair at the
//! pre-step inventory, and draws sell and buy events from the fee-adjusted
//! intensities. Every path owns a ChaCha8 stream selected by `(seed,
//! path_id)`, so results do not depend on how paths are scheduled.

use alloc::format;
use alloc::vec::Vec;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Open01, StandardNormal, StandardUniform};

use crate::error::{contract, Result};
use crate::exact::{FeeSchedule, LinearFeeModel};
use crate::market::{buy_intensity, sell_intensity, FeePair, MarketParams};
use crate::pool::{AssetGrid, GridKind};
use crate::quadratic::{LinearizedRates, QuadCoeffs};

/// A rule producing fees from `(t, inventory, oracle price)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Strategy {
    /// Closed-form optimal fees under a constant oracle price. Ignores `s`.
    OptimalFa(FeeSchedule),
    /// Optimal fees of the quadratic expansion; affine in `y` and `s`.
    OptimalSa { coeffs: QuadCoeffs, lin: LinearizedRates, k: f64 },
    /// Optimal FA fees linearized around `y0`. Ignores `s`.
    LinearFa(LinearFeeModel),
    /// The same fee on both sides at all times.
    Constant(f64),
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::OptimalFa(_) => "optimal_fa",
            Strategy::OptimalSa { .. } => "optimal_sa",
            Strategy::LinearFa(_) => "linear_fa",
            Strategy::Constant(_) => "constant",
        }
    }

    /// Checks that the strategy was built for this grid.
    pub fn check_grid(&self, grid: &AssetGrid) -> Result<()> {
        match self {
            Strategy::OptimalFa(schedule) => {
                if schedule.dim() != grid.len() {
                    return Err(contract!(
                        "fee schedule covers {} grid points, grid has {}",
                        schedule.dim(),
                        grid.len()
                    ));
                }
            }
            Strategy::OptimalSa { lin, .. } => {
                let GridKind::Uniform { delta } = grid.kind() else {
                    return Err(contract!("optimal_sa needs a uniform grid"));
                };
                if delta != lin.delta_sell || delta != lin.delta_buy {
                    return Err(contract!(
                        "optimal_sa was expanded with δ± = ({}, {}) but the grid step is {delta}",
                        lin.delta_sell,
                        lin.delta_buy
                    ));
                }
                if lin.y0 != grid.spec().y0() {
                    return Err(contract!("optimal_sa expansion point differs from the grid center"));
                }
            }
            Strategy::LinearFa(model) => {
                if model.y0 != grid.spec().y0() {
                    return Err(contract!("linear model center differs from the grid center"));
                }
            }
            Strategy::Constant(c) => {
                if !c.is_finite() {
                    return Err(contract!("constant fee must be finite"));
                }
            }
        }
        Ok(())
    }

    fn time_span(&self) -> Option<(f64, f64)> {
        let span = |ts: &[f64]| Some((*ts.first()?, *ts.last()?));
        match self {
            Strategy::OptimalFa(s) => span(s.times()),
            Strategy::OptimalSa { coeffs, .. } => span(&coeffs.times),
            Strategy::LinearFa(m) => span(&m.times),
            Strategy::Constant(_) => None,
        }
    }

    /// Fee pair at `(t, offset, s)`. FA and linear strategies ignore `s`; a
    /// side that cannot trade at the boundary reports 0.
    pub fn fee_lookup(&self, grid: &AssetGrid, t: f64, offset: i32, s: f64) -> Result<FeePair> {
        let dense = grid
            .dense(offset)
            .ok_or_else(|| contract!("offset {offset} is not on the grid"))?;
        if !t.is_finite() {
            return Err(contract!("time must be finite"));
        }
        if let Some((lo, hi)) = self.time_span() {
            if t < lo || t > hi {
                return Err(contract!("time {t} outside the strategy's span [{lo}, {hi}]"));
            }
        } else if t < 0.0 {
            return Err(contract!("time {t} is negative"));
        }
        self.check_grid(grid)?;
        Ok(self.fees_at(grid, t, dense, s))
    }

    fn fees_at(&self, grid: &AssetGrid, t: f64, dense: usize, s: f64) -> FeePair {
        match self {
            Strategy::OptimalFa(schedule) => schedule.pair(schedule.time_index(t), dense),
            Strategy::OptimalSa { coeffs, lin, k } => {
                let j = crate::time::nearest_index(&coeffs.times, t);
                coeffs.fees_at(j, lin, *k, grid.points()[dense], s)
            }
            Strategy::LinearFa(model) => model.fees_at(model.time_index(t), grid.points()[dense]),
            Strategy::Constant(c) => FeePair::constant(*c),
        }
    }
}

/// `(𝔭*(t, y0) + 𝔪*(t, y0)) / 2` from a schedule that stores time `t`.
pub fn constant_fee_level_at(schedule: &FeeSchedule, grid: &AssetGrid, t: f64) -> Result<f64> {
    if schedule.dim() != grid.len() {
        return Err(contract!("schedule and grid dimensions differ"));
    }
    let j = schedule.time_index(t);
    let stored = schedule.times().get(j).copied().unwrap_or(f64::NAN);
    if !((stored - t).abs() <= 1e-9) {
        return Err(contract!("schedule does not store time {t}"));
    }
    let c = grid.center_index();
    match (schedule.sell(j, c), schedule.buy(j, c)) {
        (Some(p), Some(m)) => Ok(0.5 * (p + m)),
        _ => Err(contract!("schedule has no two-sided fee at the center")),
    }
}

/// Benchmark constant fee, taken at `t = 0.5`.
pub fn constant_fee_level(schedule: &FeeSchedule, grid: &AssetGrid) -> Result<f64> {
    constant_fee_level_at(schedule, grid, 0.5)
}

/// How events are drawn inside one time step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EventScheme {
    /// Independent Bernoulli draws per side with `p = 1 - exp(-λ Δt)`;
    /// if both fire, one uniform decides the order.
    #[default]
    Bernoulli,
    /// Competing exponential clocks within the step, intensities refreshed
    /// after every event (time and price frozen over the step).
    Thinning,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub n_paths: u64,
    pub n_steps: u32,
    pub seed: u64,
    pub record_paths: bool,
    pub scheme: EventScheme,
    /// Optional `[lo, hi]` clamp applied to every fee the strategy quotes.
    pub fee_bounds: Option<(f64, f64)>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_paths: 20_000,
            n_steps: 1000,
            seed: 0,
            record_paths: false,
            scheme: EventScheme::Bernoulli,
            fee_bounds: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 || self.n_steps == 0 {
            return Err(contract!("n_paths and n_steps must be positive"));
        }
        if let Some((lo, hi)) = self.fee_bounds {
            if !(lo <= hi) {
                return Err(contract!("fee bounds [{lo}, {hi}] are empty"));
            }
        }
        Ok(())
    }

    fn clamp(&self, fees: FeePair) -> FeePair {
        match self.fee_bounds {
            Some((lo, hi)) => FeePair { sell: fees.sell.clamp(lo, hi), buy: fees.buy.clamp(lo, hi) },
            None => fees,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathResult {
    pub path_id: u64,
    /// Terminal cash account.
    pub fees_collected: f64,
    pub n_sell: u32,
    pub n_buy: u32,
    /// Sum over steps of the squared change of the marginal rate.
    pub qv: f64,
    /// Signed grid offset at `T`.
    pub terminal_index: i32,
}

struct PathState<'a> {
    grid: &'a AssetGrid,
    dense: usize,
    cash: f64,
    n_sell: u32,
    n_buy: u32,
}

impl PathState<'_> {
    fn sell(&mut self, fee: f64) {
        if let Some(side) = self.grid.rates_at_dense(self.dense).sell {
            self.cash += fee * side.notional();
            self.dense += 1;
            self.n_sell += 1;
        }
    }

    fn buy(&mut self, fee: f64) {
        if let Some(side) = self.grid.rates_at_dense(self.dense).buy {
            self.cash += fee * side.notional();
            self.dense -= 1;
            self.n_buy += 1;
        }
    }
}

/// Simulates one path. Fully determined by `(cfg.seed, path_id)` and the
/// inputs.
pub fn simulate_path(
    cfg: &SimConfig,
    path_id: u64,
    strat: &Strategy,
    params: &MarketParams,
    grid: &AssetGrid,
) -> Result<PathResult> {
    cfg.validate()?;
    params.validate()?;
    strat.check_grid(grid)?;
    if path_id >= cfg.n_paths {
        return Err(contract!("path id {path_id} >= n_paths {}", cfg.n_paths));
    }
    run_path(cfg, path_id, strat, params, grid)
}

fn run_path(
    cfg: &SimConfig,
    path_id: u64,
    strat: &Strategy,
    params: &MarketParams,
    grid: &AssetGrid,
) -> Result<PathResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(path_id);

    let dt = params.horizon / f64::from(cfg.n_steps);
    let vol = params.sigma * libm::sqrt(dt);
    let mut s = params.s0;
    let mut state = PathState { grid, dense: grid.center_index(), cash: 0.0, n_sell: 0, n_buy: 0 };
    let mut qv = 0.0;

    for step in 0..cfg.n_steps {
        let t = dt * f64::from(step);
        let z_before = grid.z_at_dense(state.dense);
        let shock: f64 = StandardNormal.sample(&mut rng);
        s += vol * shock;

        match cfg.scheme {
            EventScheme::Bernoulli => {
                let fees = cfg.clamp(strat.fees_at(grid, t, state.dense, s));
                let rates = grid.rates_at_dense(state.dense);
                let ls = sell_intensity(params, &rates, s, fees.sell)?;
                let lb = buy_intensity(params, &rates, s, fees.buy)?;
                let u_sell: f64 = StandardUniform.sample(&mut rng);
                let u_buy: f64 = StandardUniform.sample(&mut rng);
                let sell = u_sell < -libm::expm1(-ls * dt);
                let buy = u_buy < -libm::expm1(-lb * dt);
                match (sell, buy) {
                    (true, true) => {
                        let u_order: f64 = StandardUniform.sample(&mut rng);
                        if u_order < 0.5 {
                            state.sell(fees.sell);
                            state.buy(fees.buy);
                        } else {
                            state.buy(fees.buy);
                            state.sell(fees.sell);
                        }
                    }
                    (true, false) => state.sell(fees.sell),
                    (false, true) => state.buy(fees.buy),
                    (false, false) => {}
                }
            }
            EventScheme::Thinning => {
                let mut remaining = dt;
                loop {
                    let fees = cfg.clamp(strat.fees_at(grid, t, state.dense, s));
                    let rates = grid.rates_at_dense(state.dense);
                    let ls = sell_intensity(params, &rates, s, fees.sell)?;
                    let lb = buy_intensity(params, &rates, s, fees.buy)?;
                    let total = ls + lb;
                    if total <= 0.0 {
                        break;
                    }
                    let u: f64 = Open01.sample(&mut rng);
                    let wait = -libm::log(u) / total;
                    if wait > remaining {
                        break;
                    }
                    remaining -= wait;
                    let pick: f64 = StandardUniform.sample(&mut rng);
                    if pick * total < ls {
                        state.sell(fees.sell);
                    } else {
                        state.buy(fees.buy);
                    }
                }
            }
        }

        let dz = grid.z_at_dense(state.dense) - z_before;
        qv += dz * dz;
    }

    Ok(PathResult {
        path_id,
        fees_collected: state.cash,
        n_sell: state.n_sell,
        n_buy: state.n_buy,
        qv,
        terminal_index: grid.offset(state.dense),
    })
}

/// Mean and standard error of one metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricStats {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(count)`.
    pub std_err: f64,
    pub count: u64,
}

impl MetricStats {
    pub fn from_samples(values: impl Iterator<Item = f64> + Clone) -> Self {
        let mut count = 0u64;
        let mut sum = Neumaier::default();
        for v in values.clone() {
            sum.add(v);
            count += 1;
        }
        if count == 0 {
            return Self { mean: f64::NAN, std_err: f64::NAN, count };
        }
        let mean = sum.total() / count as f64;
        let mut sq = Neumaier::default();
        for v in values {
            sq.add((v - mean) * (v - mean));
        }
        let std_err = if count > 1 {
            libm::sqrt(sq.total() / (count - 1) as f64 / count as f64)
        } else {
            0.0
        };
        Self { mean, std_err, count }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateStats {
    pub fees: MetricStats,
    pub sells: MetricStats,
    pub buys: MetricStats,
    pub qv: MetricStats,
}

impl AggregateStats {
    /// Aggregates path results in slice order with compensated sums.
    pub fn from_paths(paths: &[PathResult]) -> Self {
        Self {
            fees: MetricStats::from_samples(paths.iter().map(|p| p.fees_collected)),
            sells: MetricStats::from_samples(paths.iter().map(|p| f64::from(p.n_sell))),
            buys: MetricStats::from_samples(paths.iter().map(|p| f64::from(p.n_buy))),
            qv: MetricStats::from_samples(paths.iter().map(|p| p.qv)),
        }
    }

    pub fn n_paths(&self) -> u64 {
        self.fees.count
    }
}

/// `sqrt(se_a² + se_b²)`, the standard error of a difference of means.
pub fn pooled_std_err(a: &MetricStats, b: &MetricStats) -> f64 {
    libm::sqrt(a.std_err * a.std_err + b.std_err * b.std_err)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    pub stats: AggregateStats,
    /// Per-path results in path-id order, kept when `record_paths` is set.
    pub paths: Option<Vec<PathResult>>,
}

impl BatchResult {
    /// Builds the batch summary from results sorted by path id.
    pub fn from_paths(cfg: &SimConfig, paths: Vec<PathResult>) -> Result<Self> {
        if paths.len() as u64 != cfg.n_paths || paths.iter().enumerate().any(|(i, p)| p.path_id != i as u64) {
            return Err(contract!("batch results must cover path ids 0..{} in order", cfg.n_paths));
        }
        let stats = AggregateStats::from_paths(&paths);
        Ok(Self { stats, paths: cfg.record_paths.then_some(paths) })
    }
}

/// Runs `cfg.n_paths` paths serially.
pub fn run_batch(cfg: &SimConfig, strat: &Strategy, params: &MarketParams, grid: &AssetGrid) -> Result<BatchResult> {
    cfg.validate()?;
    params.validate()?;
    strat.check_grid(grid)?;
    let paths = (0..cfg.n_paths)
        .map(|id| run_path(cfg, id, strat, params, grid))
        .collect::<Result<Vec<_>>>()?;
    BatchResult::from_paths(cfg, paths)
}

/// Validates inputs once, then returns a closure simulating single paths.
/// Lets callers distribute paths however they like.
pub fn path_runner<'a>(
    cfg: &'a SimConfig,
    strat: &'a Strategy,
    params: &'a MarketParams,
    grid: &'a AssetGrid,
) -> Result<impl Fn(u64) -> Result<PathResult> + Sync + 'a> {
    cfg.validate()?;
    params.validate()?;
    strat.check_grid(grid)?;
    Ok(move |id: u64| {
        if id >= cfg.n_paths {
            return Err(crate::Error::Contract(format!("path id {id} >= n_paths {}", cfg.n_paths)));
        }
        run_path(cfg, id, strat, params, grid)
    })
}

/// Neumaier's compensated summation.
#[derive(Debug, Clone, Copy, Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}
