//! Quadratic expansion with a Brownian oracle price.
//!
//! The exponentials in the reduced HJB equation are replaced by their second
//! order Taylor polynomials, trade sizes are held at constants `δ±` and the
//! rates are linearized around `y0`. With the ansatz
//!
//! ```text
//! g(t, y, s) = y² A(t) + y (s b1(t) + b0(t)) + s² c2(t) + s c1(t) + c0(t)
//! ```
//!
//! each side's exponent `L± = ∓s δ± ± Z±(y) δ± + g(y ± δ±) - g(y)` is affine
//! in `(y, s)`:
//!
//! ```text
//! L = (u0 + u1 A) y + (v0 + v1 b1) s + (w0 + wA A + wb b0)
//! ```
//!
//! so `c (1 + k L + k² L² / 2)` with `c = λ / (e k)` is a quadratic in
//! `(y, s)`. Matching the coefficients of `y², y s, y, s², s, 1` gives a
//! Riccati equation for `A`, a triangular linear system for `(b0, b1)` and
//! one for `(c0, c1, c2)`. The 27 constants of those equations are computed
//! by [`derive_psi`].

use alloc::vec::Vec;

use crate::error::{contract, domain, Result};
use crate::market::{FeePair, MarketParams};
use crate::ode::rk4_step;
use crate::pool::PoolSpec;
use crate::time::{check_in_horizon, nearest_index};
use crate::Error;

/// Linear approximations of `Z`, `Z₊ δ⁺` and `Z₋ δ⁻` around `y0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizedRates {
    pub pool: PoolSpec,
    pub y0: f64,
    pub z0: f64,
    pub z1: f64,
    pub zp0: f64,
    pub zp1: f64,
    pub zm0: f64,
    pub zm1: f64,
    pub delta_sell: f64,
    pub delta_buy: f64,
}

impl LinearizedRates {
    /// Exact `Z₊(y) = p² / (y (y + δ⁺))`.
    pub fn sell_rate(&self, y: f64) -> f64 {
        self.pool.depth_sq() / (y * (y + self.delta_sell))
    }

    /// Exact `Z₋(y) = p² / (y (y - δ⁻))`.
    pub fn buy_rate(&self, y: f64) -> f64 {
        self.pool.depth_sq() / (y * (y - self.delta_buy))
    }
}

pub fn linearize_rates(spec: PoolSpec, y0: f64, delta_sell: f64, delta_buy: f64) -> Result<LinearizedRates> {
    if !(delta_sell > 0.0 && delta_buy > 0.0) {
        return Err(domain!("trade sizes must be positive, got δ⁺ = {delta_sell}, δ⁻ = {delta_buy}"));
    }
    if !(y0 > delta_buy) {
        return Err(domain!("expansion point y0 = {y0} must exceed δ⁻ = {delta_buy}"));
    }
    let p2 = spec.depth_sq();
    let up = y0 * y0 + delta_sell * y0;
    let down = y0 * y0 - delta_buy * y0;
    Ok(LinearizedRates {
        pool: spec,
        y0,
        z0: p2 / (y0 * y0),
        z1: -2.0 * p2 / (y0 * y0 * y0),
        zp0: p2 * delta_sell / up,
        zp1: -p2 * delta_sell * (2.0 * y0 + delta_sell) / (up * up),
        zm0: p2 * delta_buy / down,
        zm1: -p2 * delta_buy * (2.0 * y0 - delta_buy) / (down * down),
        delta_sell,
        delta_buy,
    })
}

/// Constants of the coefficient ODEs, indexed 0..=26:
///
/// ```text
/// A'  + ψ0 + ψ1 A + ψ2 A²                                              = 0
/// b0' + ψ3 + ψ4 A + ψ5 A² + ψ6 A b0 + ψ7 b0                            = 0
/// b1' + ψ8 + ψ9 A + ψ10 A b1 + ψ11 b1                                  = 0
/// c0' + ψ12 + ψ13 A + ψ14 A² + ψ15 A b0 + ψ16 b0 + ψ17 b0² + σ² c2     = 0
/// c1' + ψ18 + ψ19 A + ψ20 A b1 + ψ21 b0 + ψ22 b0 b1 + ψ23 b1           = 0
/// c2' + ψ24 + ψ25 b1 + ψ26 b1²                                         = 0
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiConstants {
    pub psi: [f64; 27],
}

impl PsiConstants {
    pub fn riccati(&self) -> &[f64] {
        &self.psi[0..3]
    }

    pub fn b_system(&self) -> &[f64] {
        &self.psi[3..12]
    }

    pub fn c_system(&self) -> &[f64] {
        &self.psi[12..27]
    }

    /// `d/dt` of `[A, b0, b1, c0, c1, c2]`.
    pub fn time_derivative(&self, x: &[f64; 6], sigma: f64) -> [f64; 6] {
        let p = &self.psi;
        let [a, b0, b1, _c0, _c1, c2] = *x;
        [
            -(p[0] + p[1] * a + p[2] * a * a),
            -(p[3] + p[4] * a + p[5] * a * a + p[6] * a * b0 + p[7] * b0),
            -(p[8] + p[9] * a + p[10] * a * b1 + p[11] * b1),
            -(p[12] + p[13] * a + p[14] * a * a + p[15] * a * b0 + p[16] * b0 + p[17] * b0 * b0
                + sigma * sigma * c2),
            -(p[18] + p[19] * a + p[20] * a * b1 + p[21] * b0 + p[22] * b0 * b1 + p[23] * b1),
            -(p[24] + p[25] * b1 + p[26] * b1 * b1),
        ]
    }
}

/// One side's exponent `L = (u0 + u1 A) y + (v0 + v1 b1) s + (w0 + wA A + wb b0)`
/// with weight `c` in front of `1 + k L + k² L² / 2`.
struct Bracket {
    c: f64,
    u0: f64,
    u1: f64,
    v0: f64,
    v1: f64,
    w0: f64,
    wa: f64,
    wb: f64,
}

impl Bracket {
    fn sell(params: &MarketParams, lin: &LinearizedRates) -> Self {
        let d = lin.delta_sell;
        Self {
            c: libm::exp(-1.0) * params.lambda_sell / params.k,
            u0: lin.zp1,
            u1: 2.0 * d,
            v0: -d,
            v1: d,
            w0: lin.zp0 - lin.zp1 * lin.y0,
            wa: d * d,
            wb: d,
        }
    }

    fn buy(params: &MarketParams, lin: &LinearizedRates) -> Self {
        let d = lin.delta_buy;
        Self {
            c: libm::exp(-1.0) * params.lambda_buy / params.k,
            u0: -lin.zm1,
            u1: -2.0 * d,
            v0: d,
            v1: -d,
            w0: -lin.zm0 + lin.zm1 * lin.y0,
            wa: d * d,
            wb: -d,
        }
    }

    fn accumulate(&self, k: f64, p: &mut [f64; 27]) {
        let Self { c, u0, u1, v0, v1, w0, wa, wb } = *self;
        let ck = c * k;
        let ck2 = c * k * k;
        // y²: (k²/2) (u0 + u1 A)²
        p[0] += ck2 / 2.0 * u0 * u0;
        p[1] += ck2 * u0 * u1;
        p[2] += ck2 / 2.0 * u1 * u1;
        // y: k (u0 + u1 A) + k² (u0 + u1 A)(w0 + wA A + wb b0)
        p[3] += ck * u0 + ck2 * u0 * w0;
        p[4] += ck * u1 + ck2 * (u0 * wa + u1 * w0);
        p[5] += ck2 * u1 * wa;
        p[6] += ck2 * u1 * wb;
        p[7] += ck2 * u0 * wb;
        // y s: k² (u0 + u1 A)(v0 + v1 b1)
        p[8] += ck2 * u0 * v0;
        p[9] += ck2 * u1 * v0;
        p[10] += ck2 * u1 * v1;
        p[11] += ck2 * u0 * v1;
        // 1: 1 + k l0 + (k²/2) l0², l0 = w0 + wA A + wb b0
        p[12] += c + ck * w0 + ck2 / 2.0 * w0 * w0;
        p[13] += ck * wa + ck2 * w0 * wa;
        p[14] += ck2 / 2.0 * wa * wa;
        p[15] += ck2 * wa * wb;
        p[16] += ck * wb + ck2 * w0 * wb;
        p[17] += ck2 / 2.0 * wb * wb;
        // s: k (v0 + v1 b1) + k² (v0 + v1 b1) l0
        p[18] += ck * v0 + ck2 * v0 * w0;
        p[19] += ck2 * v0 * wa;
        p[20] += ck2 * v1 * wa;
        p[21] += ck2 * v0 * wb;
        p[22] += ck2 * v1 * wb;
        p[23] += ck * v1 + ck2 * v1 * w0;
        // s²: (k²/2) (v0 + v1 b1)²
        p[24] += ck2 / 2.0 * v0 * v0;
        p[25] += ck2 * v0 * v1;
        p[26] += ck2 / 2.0 * v1 * v1;
    }
}

/// Coefficient matching of the expanded HJB equation.
pub fn derive_psi(params: &MarketParams, lin: &LinearizedRates) -> PsiConstants {
    let mut p = [0.0; 27];
    Bracket::sell(params, lin).accumulate(params.k, &mut p);
    Bracket::buy(params, lin).accumulate(params.k, &mut p);

    // -φ (a + z1 y - s)² with a = z0 - z1 y0.
    let phi = params.phi;
    let a = lin.z0 - lin.z1 * lin.y0;
    p[0] -= phi * lin.z1 * lin.z1;
    p[3] -= 2.0 * phi * lin.z1 * a;
    p[8] += 2.0 * phi * lin.z1;
    p[12] -= phi * a * a;
    p[18] += 2.0 * phi * a;
    p[24] -= phi;
    PsiConstants { psi: p }
}

/// Coefficient functions on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadCoeffs {
    pub times: Vec<f64>,
    pub a: Vec<f64>,
    pub b0: Vec<f64>,
    pub b1: Vec<f64>,
    pub c0: Vec<f64>,
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
    pub psi: PsiConstants,
    pub sigma: f64,
    horizon: f64,
}

/// Values above this mark the Riccati solution as diverged.
const BLOW_UP: f64 = 1e12;

/// Backward RK4 integration from `T` to 0 of the triangular system in
/// [`PsiConstants`], all six components stepped together.
pub fn integrate_coeffs(psi: &PsiConstants, params: &MarketParams, n_steps: usize) -> Result<QuadCoeffs> {
    params.validate()?;
    if n_steps < 100 {
        return Err(contract!("coefficient integration needs at least 100 steps, got {n_steps}"));
    }
    let horizon = params.horizon;
    let sigma = params.sigma;
    let h = horizon / n_steps as f64;
    // dx/dτ = -dx/dt with τ = T - t.
    let rhs = |x: &[f64; 6]| {
        let d = psi.time_derivative(x, sigma);
        [-d[0], -d[1], -d[2], -d[3], -d[4], -d[5]]
    };
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut x = [0.0; 6];
    states.push(x);
    for step in 1..=n_steps {
        x = rk4_step(&x, h, rhs);
        if x.iter().any(|v| !v.is_finite()) || x[0].abs() > BLOW_UP {
            return Err(Error::RiccatiBlowUp { t: horizon - h * step as f64 });
        }
        states.push(x);
    }
    states.reverse();
    let times = (0..=n_steps)
        .map(|j| if j == n_steps { horizon } else { h * j as f64 })
        .collect();
    let column = |i: usize| states.iter().map(|s| s[i]).collect::<Vec<_>>();
    Ok(QuadCoeffs {
        times,
        a: column(0),
        b0: column(1),
        b1: column(2),
        c0: column(3),
        c1: column(4),
        c2: column(5),
        psi: *psi,
        sigma,
        horizon,
    })
}

impl QuadCoeffs {
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, j: usize) -> [f64; 6] {
        [self.a[j], self.b0[j], self.b1[j], self.c0[j], self.c1[j], self.c2[j]]
    }

    /// Index of the stored time nearest to `t`, which must lie in `[0, T]`.
    pub fn time_index(&self, t: f64) -> Result<usize> {
        check_in_horizon(t, self.horizon)?;
        Ok(nearest_index(&self.times, t))
    }

    /// `B̂(t, s) = s b1 + b0` at a stored time.
    pub fn b_hat(&self, j: usize, s: f64) -> f64 {
        s * self.b1[j] + self.b0[j]
    }

    /// `g` at a stored time index.
    pub fn g_at(&self, j: usize, y: f64, s: f64) -> f64 {
        y * y * self.a[j] + y * self.b_hat(j, s) + s * s * self.c2[j] + s * self.c1[j] + self.c0[j]
    }

    /// `g(t, y, s)` with nearest-time coefficients.
    pub fn eval_g(&self, t: f64, y: f64, s: f64) -> Result<f64> {
        Ok(self.g_at(self.time_index(t)?, y, s))
    }

    /// Optimal fees at a stored time index.
    pub fn fees_at(&self, j: usize, lin: &LinearizedRates, k: f64, y: f64, s: f64) -> FeePair {
        let a = self.a[j];
        let b = self.b_hat(j, s);
        let zs = lin.sell_rate(y);
        let zb = lin.buy_rate(y);
        FeePair {
            sell: -((2.0 * y + lin.delta_sell) * a + b) / zs + 1.0 / (k * zs * lin.delta_sell),
            buy: -((-2.0 * y + lin.delta_buy) * a - b) / zb + 1.0 / (k * zb * lin.delta_buy),
        }
    }

    /// Left side of the expanded HJB equation at a stored time, returned as
    /// `(residual, scale)` where `scale` is the largest absolute term.
    ///
    /// The jump brackets are evaluated directly from `g` and the linearized
    /// rates; only `∂_t g` comes from the coefficient ODEs.
    pub fn hjb_residual(&self, j: usize, lin: &LinearizedRates, params: &MarketParams, y: f64, s: f64) -> (f64, f64) {
        let d = self.psi.time_derivative(&self.state(j), self.sigma);
        let dt_terms = [y * y * d[0], y * s * d[2], y * d[1], s * s * d[5], s * d[4], d[3]];
        let diffusion = self.sigma * self.sigma * self.c2[j];
        let gap = lin.z0 + lin.z1 * (y - lin.y0) - s;
        let pen = -params.phi * gap * gap;

        let g = self.g_at(j, y, s);
        let k = params.k;
        let e_inv = libm::exp(-1.0);
        let l_sell = -s * lin.delta_sell
            + lin.zp0
            + lin.zp1 * (y - lin.y0)
            + self.g_at(j, y + lin.delta_sell, s)
            - g;
        let l_buy = s * lin.delta_buy - (lin.zm0 + lin.zm1 * (y - lin.y0))
            + self.g_at(j, y - lin.delta_buy, s)
            - g;
        let bracket = |lambda: f64, l: f64| e_inv * lambda / k * (1.0 + k * l + 0.5 * k * k * l * l);
        let sell = bracket(params.lambda_sell, l_sell);
        let buy = bracket(params.lambda_buy, l_buy);

        let residual = dt_terms.iter().sum::<f64>() + diffusion + pen + sell + buy;
        let scale = dt_terms
            .iter()
            .chain([diffusion, pen, sell, buy].iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()));
        (residual, scale)
    }
}

/// Optimal fees from the quadratic value function:
/// `𝔭* = -((2y + δ⁺) A + B̂) / Z₊(y) + 1 / (k Z₊(y) δ⁺)`,
/// `𝔪* = -((-2y + δ⁻) A - B̂) / Z₋(y) + 1 / (k Z₋(y) δ⁻)`.
pub fn fees_quadratic(
    coeffs: &QuadCoeffs,
    lin: &LinearizedRates,
    params: &MarketParams,
    t: f64,
    y: f64,
    s: f64,
) -> Result<FeePair> {
    if !(y > lin.delta_buy) {
        return Err(domain!("inventory {y} is outside the expansion's domain"));
    }
    let j = coeffs.time_index(t)?;
    Ok(coeffs.fees_at(j, lin, params.k, y, s))
}

/// `(1 / (Z₊(y) δ⁺), 1 / (Z₋(y) δ⁻))`, the `k -> 0` limits of `k 𝔭*`, `k 𝔪*`.
pub fn limit_fees_k0_quadratic(lin: &LinearizedRates, y: f64) -> FeePair {
    FeePair {
        sell: 1.0 / (lin.sell_rate(y) * lin.delta_sell),
        buy: 1.0 / (lin.buy_rate(y) * lin.delta_buy),
    }
}
