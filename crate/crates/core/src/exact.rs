//! Constant oracle price.
//!
//! With `S_t = S0`, the substitution `w = exp(k g)` turns the reduced HJB
//! equation into the linear system `∂_t w + A w = 0`, `w(T) = 1`, with a
//! tridiagonal generator `A`. Hence `w(t) = exp(A (T - t)) 1` and the optimal
//! fees follow in closed form from ratios of neighbouring entries of `w`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{contract, domain, Result};
use crate::linalg::{expm, Matrix};
use crate::market::{penalty, FeePair, MarketParams};
use crate::pool::AssetGrid;
use crate::time::{check_in_horizon, nearest_index};

/// Tridiagonal generator of the linear system for `w`.
///
/// Row `i` holds the coupling of `w(t, y^i)` to itself and its neighbours:
/// `A[i][i] = -k P(y^i, s)`,
/// `A[i][i+1] = λ⁺ exp(k (Z₊(y^i) - s) Δ⁺(y^i) - 1)`,
/// `A[i][i-1] = λ⁻ exp(-k (Z₋(y^i) - s) Δ⁻(y^i) - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    matrix: Matrix,
    oracle_s: f64,
}

impl GeneratorMatrix {
    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn oracle_s(&self) -> f64 {
        self.oracle_s
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    /// Generator of the `k -> 0` limit: `λ⁺/e` above and `λ⁻/e` below the
    /// diagonal, nothing else.
    pub fn k_zero_limit(params: &MarketParams, grid: &AssetGrid) -> Self {
        let n = grid.len();
        let mut m = Matrix::zeros(n);
        let e_inv = libm::exp(-1.0);
        for i in 0..n.saturating_sub(1) {
            m[(i, i + 1)] = params.lambda_sell * e_inv;
            m[(i + 1, i)] = params.lambda_buy * e_inv;
        }
        Self { matrix: m, oracle_s: params.s0 }
    }
}

/// Builds the generator at oracle price `s`.
pub fn build_generator(params: &MarketParams, grid: &AssetGrid, s: f64) -> Result<GeneratorMatrix> {
    params.validate()?;
    let n = grid.len();
    let k = params.k;
    let mut m = Matrix::zeros(n);
    for i in 0..n {
        let rates = grid.rates_at_dense(i);
        m[(i, i)] = -k * penalty(params, rates.z_marginal, s);
        if let Some(side) = rates.sell {
            let x = k * (side.notional() - s * side.delta) - 1.0;
            m[(i, i + 1)] = params.lambda_sell * params.guarded_exp(x)?;
        }
        if let Some(side) = rates.buy {
            let x = -k * (side.notional() - s * side.delta) - 1.0;
            m[(i, i - 1)] = params.lambda_buy * params.guarded_exp(x)?;
        }
    }
    Ok(GeneratorMatrix { matrix: m, oracle_s: s })
}

/// `w` on a list of times together with the data needed to read off `g`
/// and `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueSurface {
    times: Vec<f64>,
    w: Vec<Vec<f64>>,
    k: f64,
    generator: GeneratorMatrix,
}

impl ValueSurface {
    /// Assembles a surface from precomputed rows, e.g. a perturbed copy.
    pub fn from_parts(
        times: Vec<f64>,
        w: Vec<Vec<f64>>,
        k: f64,
        generator: GeneratorMatrix,
    ) -> Result<Self> {
        if times.len() != w.len() {
            return Err(contract!("{} times but {} rows of w", times.len(), w.len()));
        }
        if w.iter().any(|row| row.len() != generator.dim()) {
            return Err(contract!("rows of w must have length {}", generator.dim()));
        }
        if w.iter().flatten().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(domain!("w must be positive and finite"));
        }
        Ok(Self { times, w, k, generator })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn generator(&self) -> &GeneratorMatrix {
        &self.generator
    }

    pub fn dim(&self) -> usize {
        self.generator.dim()
    }

    pub fn w_row(&self, time_index: usize) -> &[f64] {
        &self.w[time_index]
    }

    pub fn w(&self, time_index: usize, dense: usize) -> f64 {
        self.w[time_index][dense]
    }

    /// Reduced value `g = log(w) / k`.
    pub fn g(&self, time_index: usize, dense: usize) -> f64 {
        libm::log(self.w(time_index, dense)) / self.k
    }

    /// Full value `v = cash + g`.
    pub fn value(&self, time_index: usize, dense: usize, cash: f64) -> f64 {
        cash + self.g(time_index, dense)
    }

    /// Index of the stored time nearest to `t`.
    pub fn time_index(&self, t: f64) -> usize {
        nearest_index(&self.times, t)
    }
}

/// Computes `w(t) = exp(A (T - t)) 1` at every requested time.
///
/// `times` must be sorted ascending inside `[0, T]`. Rows are produced by
/// propagating backwards from `T` with `exp(A Δτ)` over each gap; equal gaps
/// reuse one exponential.
pub fn solve_value(gen: &GeneratorMatrix, params: &MarketParams, times: &[f64]) -> Result<ValueSurface> {
    params.validate()?;
    let w = propagate(gen.matrix(), params.horizon, times)?;
    ValueSurface::from_parts(times.to_vec(), w, params.k, gen.clone())
}

fn propagate(a: &Matrix, horizon: f64, times: &[f64]) -> Result<Vec<Vec<f64>>> {
    if times.is_empty() {
        return Err(contract!("no evaluation times"));
    }
    for &t in times {
        check_in_horizon(t, horizon)?;
    }
    if times.windows(2).any(|p| p[0] > p[1]) {
        return Err(contract!("evaluation times must be sorted ascending"));
    }
    let n = a.dim();
    let mut rows = vec![Vec::new(); times.len()];
    let mut w = vec![1.0; n];
    let mut tau_prev = 0.0;
    let mut cached: Option<(f64, Matrix)> = None;
    for (j, &t) in times.iter().enumerate().rev() {
        let tau = horizon - t;
        let gap = tau - tau_prev;
        if gap > 0.0 {
            let reuse = matches!(&cached, Some((g, _)) if (g - gap).abs() <= 1e-12 * horizon);
            if !reuse {
                cached = Some((gap, expm(&a.scaled(gap))?));
            }
            let (_, e) = cached.as_ref().expect("propagator cached above");
            w = e.matvec(&w);
        }
        tau_prev = tau;
        rows[j] = w.clone();
    }
    Ok(rows)
}

/// Optimal fees on a time list. Entries are `None` where the side is not
/// tradable (sell at the top, buy at the bottom of the grid).
#[derive(Debug, Clone, PartialEq)]
pub struct FeeSchedule {
    times: Vec<f64>,
    sell: Vec<Vec<Option<f64>>>,
    buy: Vec<Vec<Option<f64>>>,
}

impl FeeSchedule {
    /// Builds a schedule from explicit rows, one per time.
    pub fn from_rows(times: Vec<f64>, sell: Vec<Vec<Option<f64>>>, buy: Vec<Vec<Option<f64>>>) -> Result<Self> {
        if times.is_empty() || sell.len() != times.len() || buy.len() != times.len() {
            return Err(contract!("need one sell and one buy row per time"));
        }
        let dim = sell[0].len();
        if dim == 0 || sell.iter().chain(&buy).any(|r| r.len() != dim) {
            return Err(contract!("fee rows must share a nonzero length"));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) || !times.iter().all(|t| t.is_finite()) {
            return Err(contract!("times must be finite and strictly increasing"));
        }
        Ok(Self { times, sell, buy })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn dim(&self) -> usize {
        self.sell.first().map_or(0, Vec::len)
    }

    pub fn sell(&self, time_index: usize, dense: usize) -> Option<f64> {
        self.sell[time_index][dense]
    }

    pub fn buy(&self, time_index: usize, dense: usize) -> Option<f64> {
        self.buy[time_index][dense]
    }

    pub fn sell_row(&self, time_index: usize) -> &[Option<f64>] {
        &self.sell[time_index]
    }

    pub fn buy_row(&self, time_index: usize) -> &[Option<f64>] {
        &self.buy[time_index]
    }

    pub fn time_index(&self, t: f64) -> usize {
        nearest_index(&self.times, t)
    }

    /// Fee pair at a time index; an untradable side reports 0.
    pub fn pair(&self, time_index: usize, dense: usize) -> FeePair {
        FeePair {
            sell: self.sell(time_index, dense).unwrap_or(0.0),
            buy: self.buy(time_index, dense).unwrap_or(0.0),
        }
    }

    /// Scales every defined entry, e.g. to compare `k 𝔭*` with its limit.
    pub fn scaled(&self, factor: f64) -> Self {
        let scale = |rows: &Vec<Vec<Option<f64>>>| {
            rows.iter()
                .map(|r| r.iter().map(|v| v.map(|x| x * factor)).collect())
                .collect()
        };
        Self { times: self.times.clone(), sell: scale(&self.sell), buy: scale(&self.buy) }
    }
}

/// Closed-form maximizers:
/// `𝔭* = (1 + log(w_i / w_{i+1})) / (k Z₊ Δ⁺)`,
/// `𝔪* = (1 + log(w_i / w_{i-1})) / (k Z₋ Δ⁻)`.
pub fn optimal_fees(surface: &ValueSurface, grid: &AssetGrid) -> Result<FeeSchedule> {
    if surface.dim() != grid.len() {
        return Err(contract!(
            "value surface has {} grid points, grid has {}",
            surface.dim(),
            grid.len()
        ));
    }
    Ok(fees_from_w(&surface.times, &surface.w, grid, surface.k))
}

fn fees_from_w(times: &[f64], w: &[Vec<f64>], grid: &AssetGrid, scale: f64) -> FeeSchedule {
    let n = grid.len();
    let rates: Vec<_> = (0..n).map(|d| grid.rates_at_dense(d)).collect();
    let mut sell = Vec::with_capacity(times.len());
    let mut buy = Vec::with_capacity(times.len());
    for row in w {
        sell.push(
            (0..n)
                .map(|d| {
                    rates[d].sell.map(|side| {
                        (1.0 + libm::log(row[d] / row[d + 1])) / (scale * side.notional())
                    })
                })
                .collect(),
        );
        buy.push(
            (0..n)
                .map(|d| {
                    rates[d].buy.map(|side| {
                        (1.0 + libm::log(row[d] / row[d - 1])) / (scale * side.notional())
                    })
                })
                .collect(),
        );
    }
    FeeSchedule { times: times.to_vec(), sell, buy }
}

/// Limits `lim_{k->0} k 𝔭*` and `lim_{k->0} k 𝔪*`, built from the reduced
/// generator of [`GeneratorMatrix::k_zero_limit`].
pub fn limit_fees_k0(grid: &AssetGrid, params: &MarketParams, times: &[f64]) -> Result<FeeSchedule> {
    let gen = GeneratorMatrix::k_zero_limit(params, grid);
    let w = propagate(gen.matrix(), params.horizon, times)?;
    Ok(fees_from_w(times, &w, grid, 1.0))
}

/// Per-time affine fee model `fee(y) ≈ intercept + slope (y - y0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFeeModel {
    pub times: Vec<f64>,
    pub y0: f64,
    pub intercept_sell: Vec<f64>,
    pub slope_sell: Vec<f64>,
    pub intercept_buy: Vec<f64>,
    pub slope_buy: Vec<f64>,
}

impl LinearFeeModel {
    pub fn fees_at(&self, time_index: usize, y: f64) -> FeePair {
        let dy = y - self.y0;
        FeePair {
            sell: self.intercept_sell[time_index] + self.slope_sell[time_index] * dy,
            buy: self.intercept_buy[time_index] + self.slope_buy[time_index] * dy,
        }
    }

    pub fn time_index(&self, t: f64) -> usize {
        nearest_index(&self.times, t)
    }
}

/// Linearizes a schedule around `y0`: intercept is the schedule at `y0`,
/// slope the central difference across the two neighbours of `y0`.
pub fn linearize_fees(schedule: &FeeSchedule, grid: &AssetGrid) -> Result<LinearFeeModel> {
    if grid.half_width() < 2 {
        return Err(contract!(
            "linearization needs half-width >= 2, got {}",
            grid.half_width()
        ));
    }
    if schedule.dim() != grid.len() {
        return Err(contract!("schedule has {} grid points, grid has {}", schedule.dim(), grid.len()));
    }
    let c = grid.center_index();
    let y = grid.points();
    let span = y[c + 1] - y[c - 1];
    let missing = || contract!("schedule undefined next to the center");
    let mut model = LinearFeeModel {
        times: schedule.times.clone(),
        y0: y[c],
        intercept_sell: Vec::with_capacity(schedule.times.len()),
        slope_sell: Vec::with_capacity(schedule.times.len()),
        intercept_buy: Vec::with_capacity(schedule.times.len()),
        slope_buy: Vec::with_capacity(schedule.times.len()),
    };
    for j in 0..schedule.times.len() {
        let s = |d: usize| schedule.sell(j, d).ok_or_else(missing);
        let b = |d: usize| schedule.buy(j, d).ok_or_else(missing);
        model.intercept_sell.push(s(c)?);
        model.slope_sell.push((s(c + 1)? - s(c - 1)?) / span);
        model.intercept_buy.push(b(c)?);
        model.slope_buy.push((b(c + 1)? - b(c - 1)?) / span);
    }
    Ok(model)
}

/// `max_i |∂_t w + (A w)_i|` at a stored interior time, with `∂_t w` from a
/// central difference over the neighbouring stored times.
pub fn hjb_residual(surface: &ValueSurface, params: &MarketParams, grid: &AssetGrid, t: f64) -> Result<f64> {
    check_in_horizon(t, params.horizon)?;
    if surface.dim() != grid.len() {
        return Err(contract!("surface and grid dimensions differ"));
    }
    let j = surface.time_index(t);
    if j == 0 || j + 1 >= surface.times.len() {
        return Err(contract!("time {t} is not interior to the stored time list"));
    }
    let dt = surface.times[j + 1] - surface.times[j - 1];
    let aw = surface.generator.matrix().matvec(&surface.w[j]);
    Ok((0..surface.dim())
        .map(|i| {
            let dw = (surface.w[j + 1][i] - surface.w[j - 1][i]) / dt;
            (dw + aw[i]).abs()
        })
        .fold(0.0, f64::max))
}

/// Maximum over the grid of `|k fee(k) - limit|` for both sides at one
/// time index.
pub fn max_limit_gap(scaled: &FeeSchedule, limit: &FeeSchedule, j_scaled: usize, j_limit: usize) -> f64 {
    let gap = |a: &[Option<f64>], b: &[Option<f64>]| {
        a.iter()
            .zip(b)
            .filter_map(|(x, y)| Some((x.as_ref()? - y.as_ref()?).abs()))
            .fold(0.0, f64::max)
    };
    gap(scaled.sell_row(j_scaled), limit.sell_row(j_limit))
        .max(gap(scaled.buy_row(j_scaled), limit.buy_row(j_limit)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pool::PoolSpec;
    use crate::time::uniform_times;

    fn price_grid(n: usize) -> AssetGrid {
        AssetGrid::price_spaced(PoolSpec::new(1e8, 1000.0).unwrap(), 0.1, n).unwrap()
    }

    #[test]
    fn generator_zero_penalty_has_zero_diagonal() {
        let g = price_grid(5);
        let gen = build_generator(&MarketParams::default(), &g, 100.0).unwrap();
        for i in 0..g.len() {
            assert_eq!(gen.entry(i, i), 0.0);
            for j in 0..g.len() {
                if i.abs_diff(j) > 1 {
                    assert_eq!(gen.entry(i, j), 0.0);
                } else if i != j {
                    assert!(gen.entry(i, j) > 0.0);
                }
            }
        }
    }

    #[test]
    fn generator_upper_coupling_at_center() {
        let g = price_grid(20);
        let gen = build_generator(&MarketParams::default(), &g, 100.0).unwrap();
        let c = g.center_index();
        let got = gen.entry(c, c + 1);
        assert!((got - 17.496_011_812_290_423).abs() < 1e-9, "{got}");
        assert!((got - 50.0 * libm::exp(-1.05)).abs() < 0.01);
    }

    #[test]
    fn generator_without_flow_is_zero() {
        let g = price_grid(4);
        let p = MarketParams { lambda_sell: 0.0, lambda_buy: 0.0, ..MarketParams::default() };
        let gen = build_generator(&p, &g, 100.0).unwrap();
        assert_eq!(gen.matrix(), &Matrix::zeros(g.len()));
    }

    #[test]
    fn generator_penalty_diagonal() {
        let g = price_grid(3);
        let p = MarketParams { phi: 2.0, ..MarketParams::default() };
        let gen = build_generator(&p, &g, 100.0).unwrap();
        let d = g.dense(1).unwrap();
        // Z(y^1) = 99.9, P = 2 * 0.01, diagonal = -k P.
        assert!((gen.entry(d, d) + 2.0 * 0.02).abs() < 1e-9);
    }

    #[test]
    fn terminal_row_is_ones() {
        let g = price_grid(20);
        let p = MarketParams::default();
        let gen = build_generator(&p, &g, p.s0).unwrap();
        let ts = uniform_times(1.0, 11).unwrap();
        let surf = solve_value(&gen, &p, &ts).unwrap();
        let last = ts.len() - 1;
        assert!(surf.w_row(last).iter().all(|&w| w == 1.0));
        assert!((0..g.len()).all(|d| surf.g(last, d) == 0.0));
        assert_eq!(surf.value(last, 3, 12.5), 12.5);
        // φ = 0 makes A nonnegative, so w >= 1 and grows backwards in time.
        for j in 0..last {
            for d in 0..g.len() {
                assert!(surf.w(j, d) >= 1.0);
                assert!(surf.w(j, d) >= surf.w(j + 1, d));
            }
        }
    }

    #[test]
    fn three_state_solve_matches_scalar_odes() {
        // Hand-written ODEs for N = 1: w0' = -a01 w1, w1' = -(a10 w0 + a12 w2),
        // w2' = -a21 w1. Pins the row/column orientation of A.
        let g = price_grid(1);
        let p = MarketParams::default();
        let gen = build_generator(&p, &g, p.s0).unwrap();
        let r0 = g.rates_at_dense(0);
        let r1 = g.rates_at_dense(1);
        let r2 = g.rates_at_dense(2);
        let up = |side: crate::pool::SideRate| 50.0 * libm::exp(2.0 * (side.notional() - 100.0 * side.delta) - 1.0);
        let down = |side: crate::pool::SideRate| 50.0 * libm::exp(-2.0 * (side.notional() - 100.0 * side.delta) - 1.0);
        let (a01, a10, a12, a21) = (up(r0.sell.unwrap()), down(r1.buy.unwrap()), up(r1.sell.unwrap()), down(r2.buy.unwrap()));
        let f = |w: [f64; 3]| [a01 * w[1], a10 * w[0] + a12 * w[2], a21 * w[1]];
        // Integrate dw/dτ = f(w) from τ = 0 to 0.5 with RK4.
        let steps = 20_000;
        let h = 0.5 / steps as f64;
        let mut w = [1.0; 3];
        let add = |a: [f64; 3], b: [f64; 3], s: f64| [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]];
        for _ in 0..steps {
            let k1 = f(w);
            let k2 = f(add(w, k1, h / 2.0));
            let k3 = f(add(w, k2, h / 2.0));
            let k4 = f(add(w, k3, h));
            w = [
                w[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                w[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
                w[2] + h / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
            ];
        }
        let surf = solve_value(&gen, &p, &[0.5, 1.0]).unwrap();
        for d in 0..3 {
            assert!(((surf.w(0, d) - w[d]) / w[d]).abs() < 1e-10, "d = {d}");
        }
    }

    #[test]
    fn solve_value_rejects_times_outside_horizon() {
        let g = price_grid(2);
        let p = MarketParams::default();
        let gen = build_generator(&p, &g, p.s0).unwrap();
        assert!(matches!(solve_value(&gen, &p, &[0.5, 1.5]), Err(crate::Error::Domain(_))));
        assert!(solve_value(&gen, &p, &[-0.1]).is_err());
    }

    #[test]
    fn terminal_fees_closed_form() {
        let g = price_grid(20);
        let p = MarketParams::default();
        let gen = build_generator(&p, &g, p.s0).unwrap();
        let surf = solve_value(&gen, &p, &[0.5, 1.0]).unwrap();
        let fees = optimal_fees(&surf, &g).unwrap();
        let c = g.center_index();
        assert!((fees.sell(1, c).unwrap() - 0.009_997_499_374_686_004).abs() < 1e-14);
        assert!((fees.buy(1, c).unwrap() - 0.010_002_499_375_313_126).abs() < 1e-14);
        assert_eq!(fees.sell(0, g.len() - 1), None);
        assert_eq!(fees.buy(0, 0), None);
    }

    #[test]
    fn optimal_fees_dimension_mismatch() {
        let g = price_grid(3);
        let p = MarketParams::default();
        let gen = build_generator(&p, &g, p.s0).unwrap();
        let surf = solve_value(&gen, &p, &[1.0]).unwrap();
        assert!(matches!(optimal_fees(&surf, &price_grid(4)), Err(crate::Error::Contract(_))));
    }

    #[test]
    fn limit_terminal_closed_form() {
        let g = price_grid(20);
        let lim = limit_fees_k0(&g, &MarketParams::default(), &[1.0]).unwrap();
        let c = g.center_index();
        assert!((lim.sell(0, c).unwrap() - 0.019_994_998_749_372_01).abs() < 1e-14);
    }

    #[test]
    fn linearize_exact_on_affine_schedule() {
        let g = price_grid(5);
        let y = g.points().to_vec();
        let n = g.len();
        let sched = FeeSchedule {
            times: vec![0.0, 1.0],
            sell: (0..2)
                .map(|j| (0..n).map(|d| (d + 1 < n).then(|| 0.01 + (0.002 + 0.001 * j as f64) * (y[d] - 1000.0))).collect())
                .collect(),
            buy: (0..2)
                .map(|_| (0..n).map(|d| (d > 0).then(|| 0.02 - 0.003 * (y[d] - 1000.0))).collect())
                .collect(),
        };
        let lin = linearize_fees(&sched, &g).unwrap();
        for j in 0..2 {
            for d in 1..n - 1 {
                let f = lin.fees_at(j, y[d]);
                assert!((f.sell - sched.sell(j, d).unwrap()).abs() < 1e-12);
                assert!((f.buy - sched.buy(j, d).unwrap()).abs() < 1e-12);
            }
        }
        assert!(matches!(linearize_fees(&sched, &price_grid(1)), Err(crate::Error::Contract(_))));
    }

    #[test]
    fn residual_zero_for_zero_generator() {
        let g = price_grid(2);
        let p = MarketParams { lambda_sell: 0.0, lambda_buy: 0.0, ..MarketParams::default() };
        let gen = build_generator(&p, &g, p.s0).unwrap();
        let surf = solve_value(&gen, &p, &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(hjb_residual(&surf, &p, &g, 0.5).unwrap(), 0.0);
        assert!(matches!(hjb_residual(&surf, &p, &g, 1.0), Err(crate::Error::Contract(_))));
    }
}
