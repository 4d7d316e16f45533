//! Numerical tolerances shared by the pipeline stages.

use serde::{Deserialize, Serialize};

/// Row-sum tolerance for transition matrices and distributions.
pub const ROW_SUM: f64 = 1e-9;
/// Fixed-point residual tolerance for stationarity and round trips.
pub const FIXED_POINT: f64 = 1e-9;
/// Maximum absolute row sum of a flux field that still counts as divergence-free.
pub const DIVERGENCE: f64 = 1e-9;
/// Fluxes smaller than this in magnitude are snapped to exact zero.
pub const FLUX_SNAP: f64 = 1e-12;
/// Closure tolerance for curl-potential consistency checks.
pub const POTENTIAL: f64 = 1e-9;

/// The full tolerance set used by one pipeline run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub row: f64,
    pub fixed_point: f64,
    pub divergence: f64,
    pub flux_snap: f64,
    pub potential: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            row: ROW_SUM,
            fixed_point: FIXED_POINT,
            divergence: DIVERGENCE,
            flux_snap: FLUX_SNAP,
            potential: POTENTIAL,
        }
    }
}

impl Tolerances {
    /// Sets every comparison tolerance to `eps`, leaving the snap threshold alone.
    pub fn uniform(eps: f64) -> Self {
        Tolerances {
            row: eps,
            fixed_point: eps,
            divergence: eps,
            potential: eps,
            ..Tolerances::default()
        }
    }
}
