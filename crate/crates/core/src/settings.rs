//! Numeric thresholds shared by analysis and monitors.
//!
//! Strict equalities and `t → ∞` limits are not decidable in floating point
//! over a finite horizon; every such comparison goes through one of these.

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct Thresholds {
    /// Half-width for "equals zero" in stability classification.
    pub class_tol: f64,
    /// Maximum tail oscillation for a coefficient to count as converged.
    pub limit_tol: f64,
    /// Minimum trend slope separating growth/decay from stagnation.
    pub slope_tol: f64,
    /// Fraction of the horizon used as the "t → ∞" tail window.
    pub tail_fraction: f64,
    /// Tail maximum may exceed the pre-tail maximum by at most this factor
    /// for a trajectory to be called bounded.
    pub growth_tol: f64,
    /// Relative level below which a population counts as extinct.
    pub ext_tol: f64,
    /// Minimum relative tail amplitude for oscillation.
    pub osc_tol: f64,
    /// Absolute slack for invariant-set containment, scaled by `1 + N(0)`.
    pub inv_tol: f64,
    /// Growth by this factor over the initial magnitude flags unboundedness.
    pub unbounded_factor: f64,
    /// Negativity slack factor: components may dip to `-neg_tol_factor·(1+N(0))`.
    pub neg_tol_factor: f64,
    /// Absolute tolerance for coefficient quadrature.
    pub quad_tol: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            class_tol: 1e-9,
            limit_tol: 1e-6,
            slope_tol: 1e-4,
            tail_fraction: 0.25,
            growth_tol: 1.05,
            ext_tol: 1e-6,
            osc_tol: 1e-3,
            inv_tol: 1e-9,
            unbounded_factor: 1e6,
            neg_tol_factor: 1e-9,
            quad_tol: 1e-10,
        }
    }
}

impl Thresholds {
    pub fn neg_tol(&self, n0: f64) -> f64 {
        self.neg_tol_factor * (1.0 + n0.abs())
    }
}

/// How the per-impulse contraction `w(t_i)` of the log-contraction criterion
/// is derived from the culling fractions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum WeightRule {
    FromP,
    FromQ,
    #[default]
    FromMin,
}

impl WeightRule {
    pub fn weight(self, p: f64, q: f64) -> f64 {
        match self {
            WeightRule::FromP => p,
            WeightRule::FromQ => q,
            WeightRule::FromMin => p.min(q),
        }
    }
}
