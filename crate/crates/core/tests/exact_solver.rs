mod common;

use std::sync::OnceLock;

use ammfee_core::exact::{hjb_residual, max_limit_gap};
use ammfee_core::linalg::Matrix;
use ammfee_core::time::uniform_times;
use ammfee_core::{
    build_generator, limit_fees_k0, linearize_fees, optimal_fees, solve_value, AssetGrid,
    FeeSchedule, GeneratorMatrix, MarketParams, ValueSurface,
};
use common::{params, price_grid, rel_err};
use proptest::prelude::*;

fn surface(p: &MarketParams, grid: &AssetGrid, times: &[f64]) -> ValueSurface {
    let gen = build_generator(p, grid, p.s0).unwrap();
    solve_value(&gen, p, times).unwrap()
}

/// Backward RK4 for `dw/dτ = A w`, `w(τ = 0) = 1`, reporting `w` at each
/// requested `τ` (which must be multiples of `h`).
fn rk4_oracle(a: &Matrix, taus: &[f64], steps_per_unit: usize) -> Vec<Vec<f64>> {
    let h = 1.0 / steps_per_unit as f64;
    let axpy = |x: &[f64], y: &[f64], s: f64| x.iter().zip(y).map(|(a, b)| a + s * b).collect::<Vec<_>>();
    let mut w = vec![1.0; a.dim()];
    let mut out = Vec::new();
    let mut step = 0usize;
    for &tau in taus {
        let target = (tau * steps_per_unit as f64).round() as usize;
        while step < target {
            let k1 = a.matvec(&w);
            let k2 = a.matvec(&axpy(&w, &k1, h / 2.0));
            let k3 = a.matvec(&axpy(&w, &k2, h / 2.0));
            let k4 = a.matvec(&axpy(&w, &k3, h));
            for i in 0..w.len() {
                w[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            step += 1;
        }
        out.push(w.clone());
    }
    out
}

fn baseline() -> &'static (AssetGrid, MarketParams, ValueSurface, FeeSchedule) {
    static CELL: OnceLock<(AssetGrid, MarketParams, ValueSurface, FeeSchedule)> = OnceLock::new();
    CELL.get_or_init(|| {
        let grid = price_grid();
        let p = params(2.0, 50.0);
        let surf = surface(&p, &grid, &uniform_times(1.0, 1001).unwrap());
        let fees = optimal_fees(&surf, &grid).unwrap();
        (grid, p, surf, fees)
    })
}

#[test]
fn generator_coupling_at_center() {
    let grid = price_grid();
    let gen = build_generator(&params(2.0, 50.0), &grid, 100.0).unwrap();
    let c = grid.center_index();
    // Reference built from φ(y^0) - φ(y^1), which carries ~1e-11 cancellation.
    assert!(rel_err(gen.entry(c, c + 1), 17.496011812290423) < 1e-9);
    for i in 0..gen.dim() {
        for j in 0..gen.dim() {
            let v = gen.entry(i, j);
            if i.abs_diff(j) > 1 {
                assert_eq!(v, 0.0);
            } else if i == j {
                assert!(v <= 0.0);
            } else {
                assert!(v >= 0.0);
            }
        }
    }
    let silent = MarketParams { lambda_sell: 0.0, lambda_buy: 0.0, ..params(2.0, 50.0) };
    let zero = build_generator(&silent, &grid, 100.0).unwrap();
    assert_eq!(zero.matrix(), &Matrix::zeros(grid.len()));
}

#[test]
fn terminal_and_positivity() {
    let (grid, _, surf, fees) = baseline();
    let last = surf.times().len() - 1;
    assert!(surf.w_row(last).iter().all(|&w| w == 1.0));
    assert!((0..grid.len()).all(|d| surf.g(last, d) == 0.0));
    for j in 0..surf.times().len() {
        for d in 0..grid.len() {
            assert!(surf.w(j, d) >= 1.0 && surf.g(j, d).is_finite());
            if j > 0 {
                assert!(surf.w(j - 1, d) >= surf.w(j, d));
            }
        }
    }
    let c = grid.center_index();
    assert!(rel_err(fees.sell(last, c).unwrap(), 0.009997499374686004) < 1e-12);
    assert!(rel_err(fees.buy(last, c).unwrap(), 0.010002499375313126) < 1e-12);
    assert!(fees.sell(last, grid.len() - 1).is_none());
    assert!(fees.buy(last, 0).is_none());
}

#[test]
fn three_point_grid_matches_rk4() {
    let grid = AssetGrid::price_spaced(common::pool(), 0.1, 1).unwrap();
    let p = params(2.0, 50.0);
    let surf = surface(&p, &grid, &[0.5, 1.0]);
    let oracle = rk4_oracle(surf.generator().matrix(), &[0.5], 10_000);
    for d in 0..3 {
        assert!(rel_err(surf.w(0, d), oracle[0][d]) < 1e-8);
    }
}

#[test]
fn full_grid_matches_rk4() {
    let grid = price_grid();
    let p = params(2.0, 100.0);
    let times = [0.0, 0.25, 0.5, 1.0];
    let surf = surface(&p, &grid, &times);
    let oracle = rk4_oracle(surf.generator().matrix(), &[0.5, 0.75, 1.0], 10_000);
    for (j, row) in [2usize, 1, 0].into_iter().zip(&oracle) {
        for d in 0..grid.len() {
            let e = rel_err(surf.w(j, d), row[d]);
            assert!(e < 1e-8, "t = {}, i = {d}: {e}", times[j]);
        }
    }
}

#[test]
fn nonzero_penalty_shrinks_w() {
    let grid = price_grid();
    let p = MarketParams { phi: 0.5, ..params(2.0, 50.0) };
    let surf = surface(&p, &grid, &[0.0, 0.5, 1.0]);
    let oracle = rk4_oracle(surf.generator().matrix(), &[0.5, 1.0], 10_000);
    for d in 0..grid.len() {
        assert!(rel_err(surf.w(1, d), oracle[0][d]) < 1e-8);
        assert!(rel_err(surf.w(0, d), oracle[1][d]) < 1e-8);
        assert!(surf.w(0, d) > 0.0);
    }
}

/// Fee-dependent part of one jump bracket, `e^{-k f ZΔ} (Δg + f ZΔ)`. The
/// same shape serves both sides with the side's own notional and `Δg`.
fn bracket(k: f64, notional: f64, dg: f64, f: f64) -> f64 {
    (-k * f * notional).exp() * (dg + f * notional)
}

/// Dense-grid argmax with spacing `1e-5` over `center ± 0.1`.
fn argmax(center: f64, obj: impl Fn(f64) -> f64) -> f64 {
    let mut best = (f64::NEG_INFINITY, center);
    for j in -10_000..=10_000 {
        let f = center + 1e-5 * f64::from(j);
        let v = obj(f);
        if v > best.0 {
            best = (v, f);
        }
    }
    best.1
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn closed_form_fees_maximize_bracket(j in 0usize..1001, d in 1usize..40) {
        let (grid, p, surf, fees) = baseline();
        let k = p.k;
        let r = grid.rates_at_dense(d);
        let sell = r.sell.unwrap();
        let f = fees.sell(j, d).unwrap();
        let dg = surf.g(j, d + 1) - surf.g(j, d);
        let best = argmax(f, |x| bracket(k, sell.notional(), dg, x));
        prop_assert!((best - f).abs() <= 1e-5, "sell {best} vs {f}");
        let buy = r.buy.unwrap();
        let m = fees.buy(j, d).unwrap();
        let dg = surf.g(j, d - 1) - surf.g(j, d);
        let best = argmax(m, |x| bracket(k, buy.notional(), dg, x));
        prop_assert!((best - m).abs() <= 1e-5, "buy {best} vs {m}");
    }
}

#[test]
fn scaled_fees_approach_k_zero_limit() {
    let grid = price_grid();
    let times = [0.0, 0.5, 1.0];
    let base = params(2.0, 50.0);
    let limit = limit_fees_k0(&grid, &base, &times).unwrap();
    let c = grid.center_index();
    assert!(rel_err(limit.sell(2, c).unwrap(), 0.01999499874937201) < 1e-12);
    let scale = limit
        .sell_row(0)
        .iter()
        .chain(limit.buy_row(0))
        .flatten()
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    let gaps: Vec<f64> = [0.5, 0.1, 0.02]
        .iter()
        .map(|&k| {
            let p = MarketParams { k, ..base };
            let fees = optimal_fees(&surface(&p, &grid, &times), &grid).unwrap();
            (0..2).map(|j| max_limit_gap(&fees.scaled(k), &limit, j, j)).fold(0.0, f64::max)
        })
        .collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
    assert!(gaps[2] < 0.05 * scale, "{} vs scale {scale}", gaps[2]);
}

#[test]
fn symmetric_limit_is_reflection_symmetric() {
    let grid = price_grid();
    let limit_gen = GeneratorMatrix::k_zero_limit(&params(2.0, 50.0), &grid);
    let surf = solve_value(&limit_gen, &params(2.0, 50.0), &[0.0, 1.0]).unwrap();
    let n = grid.len();
    for d in 0..n {
        assert!(rel_err(surf.w(0, d), surf.w(0, n - 1 - d)) < 1e-12);
    }
}

#[test]
fn linear_model_tracks_schedule_near_center() {
    let (grid, _, _, fees) = baseline();
    let model = linearize_fees(fees, grid).unwrap();
    let c = grid.center_index();
    for j in 0..fees.times().len() {
        let at = model.fees_at(j, grid.points()[c]);
        assert_eq!((at.sell, at.buy), (fees.sell(j, c).unwrap(), fees.buy(j, c).unwrap()));
    }
    let j = fees.time_index(0.5);
    let mut scale = 0.0_f64;
    let mut worst = 0.0_f64;
    for d in c - 5..=c + 5 {
        let lin = model.fees_at(j, grid.points()[d]);
        let (s, b) = (fees.sell(j, d).unwrap(), fees.buy(j, d).unwrap());
        scale = scale.max(s.abs()).max(b.abs());
        worst = worst.max((lin.sell - s).abs()).max((lin.buy - b).abs());
    }
    assert!(worst < 0.1 * scale, "deviation {worst}, scale {scale}");
}

#[test]
fn linearization_is_exact_on_affine_schedules() {
    let grid = price_grid();
    let y = grid.points();
    let n = grid.len();
    let row = |a: f64, b: f64| (0..n).map(|d| Some(a + b * (y[d] - 1000.0))).collect::<Vec<_>>();
    let sched = FeeSchedule::from_rows(vec![0.0, 1.0], vec![row(0.01, 0.002), row(0.02, -0.001)], vec![
        row(0.0, -0.003),
        row(0.005, 0.0),
    ])
    .unwrap();
    let model = linearize_fees(&sched, &grid).unwrap();
    for j in 0..2 {
        for d in 0..n {
            let f = model.fees_at(j, y[d]);
            assert!((f.sell - sched.sell(j, d).unwrap()).abs() < 1e-14);
            assert!((f.buy - sched.buy(j, d).unwrap()).abs() < 1e-14);
        }
    }
}

#[test]
fn two_regimes_at_mid_horizon() {
    let (grid, _, _, fees) = baseline();
    let j = fees.time_index(0.5);
    let n = grid.len();
    let third = n / 3;
    for d in 1..third {
        assert!(fees.sell(j, d).unwrap() > fees.buy(j, d).unwrap(), "lower third at {d}");
    }
    for d in n - third..n - 1 {
        assert!(fees.sell(j, d).unwrap() < fees.buy(j, d).unwrap(), "upper third at {d}");
    }
}

#[test]
fn residual_oracle() {
    let grid = price_grid();
    let p = params(2.0, 50.0);
    let dt = 1e-4;
    let surf = surface(&p, &grid, &[0.5 - dt, 0.5, 0.5 + dt]);
    let base = hjb_residual(&surf, &p, &grid, 0.5).unwrap();
    let aw = surf.generator().matrix().matvec(surf.w_row(1));
    let norm = aw.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    assert!(base <= 1e-5 * norm, "residual {base}, |Aw| {norm}");

    // The max-norm residual is dominated by the largest entries of w, so
    // bump the node where w is largest.
    let mut w: Vec<Vec<f64>> = (0..3).map(|j| surf.w_row(j).to_vec()).collect();
    let peak = (0..grid.len()).max_by(|&a, &b| w[2][a].total_cmp(&w[2][b])).unwrap();
    w[2][peak] *= 1.01;
    let bumped = ValueSurface::from_parts(surf.times().to_vec(), w, p.k, surf.generator().clone()).unwrap();
    let r = hjb_residual(&bumped, &p, &grid, 0.5).unwrap();
    assert!(r >= 10.0 * base, "{r} vs baseline {base}");

    assert!(hjb_residual(&surf, &p, &grid, 0.5 + dt).is_err());
}
