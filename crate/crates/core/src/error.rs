use alloc::string::String;

/// Errors raised by the grid builders, solvers and simulator.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An input lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested side of the pool is not tradable at this grid index.
    #[error("grid index {index} has no {side} rate (boundary of the grid)")]
    Boundary { index: i32, side: &'static str },

    /// Caller-side contract violation: mismatched dimensions, out-of-range
    /// indices or times, unsupported strategy/grid pairings.
    #[error("contract violation: {0}")]
    Contract(String),

    /// An intensity exponent exceeded the configured cap. This points at a
    /// parameterization with unbounded arbitrage flow.
    #[error("intensity exponent {exponent:.3} exceeds cap {cap}")]
    ExponentOverflow { exponent: f64, cap: f64 },

    /// The Riccati coefficient diverged while integrating backwards.
    #[error("Riccati solution blew up at t = {t:.6}")]
    RiccatiBlowUp { t: f64 },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

macro_rules! domain {
    ($($arg:tt)*) => {
        $crate::Error::Domain(alloc::format!($($arg)*))
    };
}

macro_rules! contract {
    ($($arg:tt)*) => {
        $crate::Error::Contract(alloc::format!($($arg)*))
    };
}

pub(crate) use {contract, domain};
