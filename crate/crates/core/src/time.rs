//! Evaluation-time grids.

use alloc::vec::Vec;

use crate::error::{contract, domain, Result};

/// `n_points` equally spaced times on `[0, horizon]`, endpoints included.
pub fn uniform_times(horizon: f64, n_points: usize) -> Result<Vec<f64>> {
    if n_points < 2 {
        return Err(contract!("a time grid needs at least 2 points, got {n_points}"));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(domain!("horizon must be positive, got {horizon}"));
    }
    let last = n_points - 1;
    Ok((0..n_points)
        .map(|j| if j == last { horizon } else { horizon * j as f64 / last as f64 })
        .collect())
}

/// Position of the entry of a sorted `times` list closest to `t`.
///
/// Ties resolve to the earlier time.
pub fn nearest_index(times: &[f64], t: f64) -> usize {
    match times.binary_search_by(|probe| probe.total_cmp(&t)) {
        Ok(i) => i,
        Err(0) => 0,
        Err(i) if i >= times.len() => times.len() - 1,
        Err(i) => {
            if t - times[i - 1] <= times[i] - t {
                i - 1
            } else {
                i
            }
        }
    }
}

pub(crate) fn check_in_horizon(t: f64, horizon: f64) -> Result<()> {
    if !(0.0..=horizon).contains(&t) {
        return Err(domain!("time {t} is outside [0, {horizon}]"));
    }
    Ok(())
}
