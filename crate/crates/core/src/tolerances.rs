//! Default numerical thresholds, collected in one record.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Singular values at or below `rank_tol · max(1, σ_max)` count as zero.
    pub rank_tol: f64,
    /// Rank cutoff for Jacobian-based dimension estimates.
    pub jacobian_rank_tol: f64,
    /// A search value below this is reported as a counterexample.
    pub fail_tol: f64,
    /// A search value above this (over every restart) is reported as likely
    /// injective. Values in between are inconclusive.
    pub pass_tol: f64,
    /// Orbit radius separating genuinely different solutions.
    pub orbit_radius: f64,
    /// Recovery counts as exact when the orbit distance is at most this.
    pub recovery_orbit_tol: f64,
    /// Minimal ambiguity gap for a recovery to count as identified.
    pub ambiguity_gap_tol: f64,
    /// Relative Gram determinant below which two rows are treated as dependent.
    pub gram_det_tol: f64,
    /// `σ₃(X)` bound for rank-two membership.
    pub rank2_sigma_tol: f64,
    /// `‖M(X)‖₂` bound for kernel membership.
    pub kernel_residual_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rank_tol: 1e-8,
            jacobian_rank_tol: 1e-6,
            fail_tol: 1e-6,
            pass_tol: 1e-3,
            orbit_radius: 0.1,
            recovery_orbit_tol: 1e-6,
            ambiguity_gap_tol: 1e-6,
            gram_det_tol: 1e-10,
            rank2_sigma_tol: 1e-6,
            kernel_residual_tol: 1e-8,
        }
    }
}
