//! Shared run parameters for checks and solves.

use serde::{Deserialize, Serialize};

use crate::real::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Grid points per domain component.
    pub resolution: usize,
    /// Pointwise tolerance for exact-style comparisons.
    pub tol: Real,
    /// Tolerance for sequence limits.
    pub seq_tol: f64,
    /// Index horizon for sequence checks.
    pub horizon: u64,
    /// Iteration budget for the Jungck route (the direct route gets 100x).
    pub max_iters: usize,
    /// Truncation dimension for sequence spaces.
    pub seq_dim: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            resolution: 200,
            tol: Real::from_ratio(1, 1_000_000_000),
            seq_tol: 1e-6,
            horizon: 100_000,
            max_iters: 10_000,
            seq_dim: 8,
        }
    }
}

impl RunConfig {
    /// Picard iteration converges only linearly, so the direct route gets a
    /// larger budget.
    pub fn direct_max_iters(&self) -> usize {
        self.max_iters.saturating_mul(100)
    }
}
