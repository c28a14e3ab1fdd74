//! Optimal dynamic trading fees for a constant-product automated market maker.
//!
//! The crate is `no_std` (with `alloc`) and contains the whole numerical
//! pipeline:
//!
//! - [`pool`]: inventory grids, the level function and the marginal, buy and
//!   sell exchange rates of a constant-product pool.
//! - [`market`]: fee-adjusted rates, the controlled order-arrival intensities
//!   and the inventory penalty.
//! - [`exact`]: the constant-oracle-price solution, where the value function is
//!   `log(exp(A (T - t)) 1) / k` for a tridiagonal generator `A`.
//! - [`quadratic`]: the quadratic expansion with a Brownian oracle price, solved
//!   through a Riccati equation and two triangular linear systems.
//! - [`sim`]: a Monte Carlo engine comparing fee strategies.
//!
//! IO, configuration and the command-line driver live in the `ammfee` crate.

#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod error;
pub mod exact;
pub mod linalg;
pub mod market;
mod ode;
pub mod pool;
pub mod quadratic;
pub mod sim;
pub mod time;

pub use error::{Error, Result};
pub use exact::{
    build_generator, limit_fees_k0, linearize_fees, optimal_fees, solve_value, FeeSchedule,
    GeneratorMatrix, LinearFeeModel, ValueSurface,
};
pub use market::{CashAccount, FeePair, MarketParams};
pub use pool::{AssetGrid, GridKind, PoolSpec, RateTriple, SideRate};
pub use quadratic::{
    derive_psi, fees_quadratic, integrate_coeffs, limit_fees_k0_quadratic, linearize_rates, LinearizedRates,
    PsiConstants, QuadCoeffs,
};
pub use sim::{
    constant_fee_level, constant_fee_level_at, path_runner, run_batch, simulate_path, AggregateStats, BatchResult, EventScheme,
    MetricStats, PathResult, SimConfig, Strategy,
};
