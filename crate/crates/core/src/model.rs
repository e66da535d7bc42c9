//! The SIS vector field with logistic susceptible growth and incidence
//! `G = δ₁S + δ₂I` normalised by the carrying capacity `p = K + p₀`.
//!
//! ```text
//! S' = r(1 - G/p)·S + (γ - βS)·I
//! I' = (βS - d - γ)·I
//! ```

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::timefn::{Side, TimeFn};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Time-varying coefficients of the model.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ModelParams {
    /// Intrinsic growth rate of the susceptibles (may be signed).
    pub r: TimeFn,
    /// Death rate of the infected.
    pub d: TimeFn,
    /// Recovery rate of the infected.
    pub gamma: TimeFn,
    /// Infection rate.
    pub beta: TimeFn,
    pub delta1: TimeFn,
    pub delta2: TimeFn,
    /// Capacity floor part; must stay above `K₀ + ε₀`.
    #[cfg_attr(feature = "serde", serde(rename = "K"))]
    pub k: TimeFn,
    /// Oscillating capacity part, bounded above by `K₀`.
    pub p0: TimeFn,
    /// Strictly positive floor `ε₀` of the capacity.
    #[cfg_attr(feature = "serde", serde(default = "default_eps0"))]
    pub eps0: f64,
}

#[cfg(feature = "serde")]
fn default_eps0() -> f64 {
    1e-6
}

/// Susceptible and infected counts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct State {
    #[cfg_attr(feature = "serde", serde(rename = "S"))]
    pub s: f64,
    #[cfg_attr(feature = "serde", serde(rename = "I"))]
    pub i: f64,
}

impl State {
    pub const ZERO: State = State { s: 0.0, i: 0.0 };

    pub fn new(s: f64, i: f64) -> Self {
        Self { s, i }
    }

    /// Total population `N = S + I`.
    #[inline]
    pub fn n(&self) -> f64 {
        self.s + self.i
    }

    pub fn is_finite(&self) -> bool {
        self.s.is_finite() && self.i.is_finite()
    }

    pub fn norm_inf(&self) -> f64 {
        self.s.abs().max(self.i.abs())
    }
}

/// Coefficients frozen at one instant (or their constant limits).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Coefficients {
    pub r: f64,
    pub d: f64,
    pub gamma: f64,
    pub beta: f64,
    pub delta1: f64,
    pub delta2: f64,
    /// Carrying capacity `K + p₀`.
    pub p: f64,
}

impl Coefficients {
    #[inline]
    pub fn incidence(&self, state: State) -> f64 {
        self.delta1 * state.s + self.delta2 * state.i
    }

    /// `(S', I')`. `I'` carries `I` as an explicit factor, so `I = 0` gives
    /// exactly zero.
    #[inline]
    pub fn field(&self, state: State) -> (f64, f64) {
        let g = self.incidence(state);
        let ds = self.r * (1.0 - g / self.p) * state.s + (self.gamma - self.beta * state.s) * state.i;
        let di = (self.beta * state.s - self.d - self.gamma) * state.i;
        (ds, di)
    }

    /// Net per-capita growth of the susceptibles in isolation, `r(1 - G/p)`.
    #[inline]
    pub fn logistic_factor(&self, state: State) -> f64 {
        self.r * (1.0 - self.incidence(state) / self.p)
    }

    /// Per-capita growth of the infected, `βS - d - γ`.
    #[inline]
    pub fn infected_rate(&self, state: State) -> f64 {
        self.beta * state.s - self.d - self.gamma
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelError {
    /// The carrying capacity reached zero or below.
    NonPositiveCapacity { t: f64, p: f64 },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::NonPositiveCapacity { t, p } => {
                write!(f, "carrying capacity p({t}) = {p} is not positive")
            }
        }
    }
}

impl core::error::Error for ModelError {}

/// One failed load-time invariant.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Violation {
    /// Stable machine-readable identifier, e.g. `impulse-gap`.
    pub code: &'static str,
    pub message: String,
}

impl Violation {
    pub fn new(code: &'static str, message: String) -> Self {
        Self { code, message }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.code, self.message)
    }
}

/// Lower and upper bounds of the incidence weights over a window.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct DeltaBounds {
    pub delta_m1: f64,
    pub delta_max1: f64,
    pub delta_m2: f64,
    pub delta_max2: f64,
}

impl DeltaBounds {
    /// `δ_m = min(δ_m1, δ_m2)`: `δ_m·N ≤ G` for nonnegative states.
    pub fn delta_m(&self) -> f64 {
        self.delta_m1.min(self.delta_m2)
    }

    /// `δ_M = max(δ_M1, δ_M2)`: `G ≤ δ_M·N` for nonnegative states.
    pub fn delta_max(&self) -> f64 {
        self.delta_max1.max(self.delta_max2)
    }
}

impl ModelParams {
    /// All coefficients constant.
    pub fn constant(r: f64, d: f64, gamma: f64, beta: f64, delta1: f64, delta2: f64, p: f64) -> Self {
        Self {
            r: TimeFn::constant(r),
            d: TimeFn::constant(d),
            gamma: TimeFn::constant(gamma),
            beta: TimeFn::constant(beta),
            delta1: TimeFn::constant(delta1),
            delta2: TimeFn::constant(delta2),
            k: TimeFn::constant(p),
            p0: TimeFn::constant(0.0),
            eps0: 1e-6,
        }
    }

    pub fn named(&self) -> [(&'static str, &TimeFn); 8] {
        [
            ("r", &self.r),
            ("d", &self.d),
            ("gamma", &self.gamma),
            ("beta", &self.beta),
            ("delta1", &self.delta1),
            ("delta2", &self.delta2),
            ("K", &self.k),
            ("p0", &self.p0),
        ]
    }

    /// The carrying capacity as a single time function, `K + p₀`.
    pub fn capacity_fn(&self) -> TimeFn {
        TimeFn::sum(vec![self.k.clone(), self.p0.clone()])
    }

    #[inline]
    pub fn coefficients_at(&self, t: f64) -> Coefficients {
        self.coefficients_on(t, Side::Right)
    }

    pub fn coefficients_on(&self, t: f64, side: Side) -> Coefficients {
        Coefficients {
            r: self.r.value_on(t, side),
            d: self.d.value_on(t, side),
            gamma: self.gamma.value_on(t, side),
            beta: self.beta.value_on(t, side),
            delta1: self.delta1.value_on(t, side),
            delta2: self.delta2.value_on(t, side),
            p: self.k.value_on(t, side) + self.p0.value_on(t, side),
        }
    }

    /// `p(t) = K(t) + p₀(t)`.
    pub fn carrying_capacity(&self, t: f64) -> Result<f64, ModelError> {
        let p = self.k.value(t) + self.p0.value(t);
        if p > 0.0 {
            Ok(p)
        } else {
            Err(ModelError::NonPositiveCapacity { t, p })
        }
    }

    /// `G(t) = δ₁(t)S + δ₂(t)I`.
    pub fn incidence(&self, state: State, t: f64) -> f64 {
        self.delta1.value(t) * state.s + self.delta2.value(t) * state.i
    }

    pub fn vector_field(&self, t: f64, state: State) -> Result<(f64, f64), ModelError> {
        self.vector_field_on(t, state, Side::Right)
    }

    pub fn vector_field_on(&self, t: f64, state: State, side: Side) -> Result<(f64, f64), ModelError> {
        let c = self.coefficients_on(t, side);
        if !(c.p > 0.0) {
            return Err(ModelError::NonPositiveCapacity { t, p: c.p });
        }
        Ok(c.field(state))
    }

    /// Union of all coefficient breakpoints in `(t0, t1)`.
    pub fn breakpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for (_, f) in self.named() {
            f.collect_breakpoints(t0, t1, &mut out);
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    pub fn delta_bounds(&self, t0: f64, t1: f64) -> DeltaBounds {
        let b1 = self.delta1.bounds_over(t0, t1);
        let b2 = self.delta2.bounds_over(t0, t1);
        DeltaBounds { delta_m1: b1.lower, delta_max1: b1.upper, delta_m2: b2.lower, delta_max2: b2.upper }
    }

    /// Load-time invariants over `[0, horizon]`. Returns every violation
    /// found, not just the first.
    pub fn validate(&self, horizon: f64, allow_negative_gamma: bool) -> Vec<Violation> {
        let mut out = Vec::new();
        for (name, f) in self.named() {
            if let Err(e) = f.validate() {
                out.push(Violation::new("timefn-invalid", format!("{name}: {e}")));
                continue;
            }
            let b = f.bounds_over(0.0, horizon);
            if !b.is_finite() {
                out.push(Violation::new("timefn-unbounded", format!("{name} is not bounded on [0, {horizon}]")));
            }
        }
        if !out.is_empty() {
            return out;
        }
        if !(self.eps0 > 0.0) || !self.eps0.is_finite() {
            out.push(Violation::new("capacity-floor", format!("eps0 must be positive, got {}", self.eps0)));
            return out;
        }

        let nonneg: [(&str, &TimeFn); 4] =
            [("d", &self.d), ("beta", &self.beta), ("delta1", &self.delta1), ("delta2", &self.delta2)];
        for (name, f) in nonneg {
            let lo = f.bounds_over(0.0, horizon).lower;
            if lo < 0.0 {
                out.push(Violation::new(
                    "negative-coefficient",
                    format!("{name} must be nonnegative on [0, {horizon}] (lower bound {lo})"),
                ));
            }
        }
        if !allow_negative_gamma {
            let lo = self.gamma.bounds_over(0.0, horizon).lower;
            if lo < 0.0 {
                out.push(Violation::new(
                    "negative-coefficient",
                    format!(
                        "gamma must be nonnegative on [0, {horizon}] (lower bound {lo}); \
                         enable allow_negative_gamma for the negative-recovery regime"
                    ),
                ));
            }
        }

        let k_lo = self.k.bounds_over(0.0, horizon).lower;
        let k0 = k_lo - self.eps0;
        if k0 < 0.0 {
            out.push(Violation::new(
                "capacity-floor",
                format!("min K = {k_lo} must be at least K0 + eps0 with K0 >= 0 (eps0 = {})", self.eps0),
            ));
        } else {
            let p0_hi = self.p0.bounds_over(0.0, horizon).upper;
            if p0_hi > k0 {
                out.push(Violation::new(
                    "capacity-offset",
                    format!("max p0 = {p0_hi} exceeds K0 = min K - eps0 = {k0}"),
                ));
            }
        }
        let p_lo = self.capacity_fn().bounds_over(0.0, horizon).lower;
        if p_lo < self.eps0 {
            out.push(Violation::new(
                "capacity-positive",
                format!("carrying capacity K + p0 may drop to {p_lo}, below eps0 = {}", self.eps0),
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams {
        ModelParams::constant(1.0, 0.5, 0.5, 0.1, 1.0, 1.0, 100.0)
    }

    #[test]
    fn capacity_from_constant_parts() {
        assert_eq!(params().carrying_capacity(3.0).unwrap(), 100.0);
    }

    #[test]
    fn capacity_with_sinusoidal_offset_peaks() {
        let mut p = params();
        p.p0 = TimeFn::sinusoid(0.0, 10.0, 1.0, 0.0);
        assert!((p.carrying_capacity(0.25).unwrap() - 110.0).abs() < 1e-12);
    }

    #[test]
    fn offset_above_floor_is_rejected() {
        let mut p = params();
        p.p0 = TimeFn::constant(200.0);
        let v = p.validate(10.0, false);
        assert!(v.iter().any(|v| v.code == "capacity-offset"), "{v:?}");
    }

    #[test]
    fn non_positive_capacity_is_an_error() {
        let mut p = params();
        p.k = TimeFn::constant(0.0);
        assert!(p.carrying_capacity(0.0).is_err());
        assert!(p.vector_field(0.0, State::new(1.0, 1.0)).is_err());
    }

    #[test]
    fn incidence_equals_total_for_unit_weights() {
        assert_eq!(params().incidence(State::new(30.0, 20.0), 0.0), 50.0);
        assert_eq!(params().incidence(State::ZERO, 0.0), 0.0);
    }

    #[test]
    fn incidence_unequal_weights_within_envelope() {
        let mut p = params();
        p.delta1 = TimeFn::constant(0.5);
        p.delta2 = TimeFn::constant(2.0);
        let x = State::new(10.0, 5.0);
        let g = p.incidence(x, 0.0);
        assert_eq!(g, 15.0);
        let db = p.delta_bounds(0.0, 1.0);
        assert!(db.delta_m() * x.n() <= g && g <= db.delta_max() * x.n());
    }

    #[test]
    fn infection_free_susceptible_growth() {
        let p = ModelParams::constant(1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 100.0);
        assert_eq!(p.vector_field(0.0, State::new(50.0, 0.0)).unwrap(), (25.0, 0.0));
    }

    #[test]
    fn origin_is_stationary() {
        assert_eq!(params().vector_field(1.0, State::ZERO).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn endemic_point_is_stationary() {
        let (ds, di) = params().vector_field(0.0, State::new(10.0, 15.0)).unwrap();
        assert!(ds.abs() < 1e-13 && di.abs() < 1e-13);
    }

    #[test]
    fn zero_infected_gives_exact_zero_rate() {
        let mut p = params();
        p.beta = TimeFn::sinusoid(0.3, 0.2, 1.7, 0.4);
        for k in 0..50 {
            let t = 0.37 * k as f64;
            let (_, di) = p.vector_field(t, State::new(3.0 + t, 0.0)).unwrap();
            assert_eq!(di, 0.0);
        }
    }

    #[test]
    fn negative_beta_and_gamma_are_rejected() {
        let mut p = params();
        p.beta = TimeFn::constant(-0.1);
        p.gamma = TimeFn::sinusoid(0.0, 1.0, 1.0, 0.0);
        let v = p.validate(5.0, false);
        assert_eq!(v.iter().filter(|v| v.code == "negative-coefficient").count(), 2);
        let v = p.validate(5.0, true);
        assert_eq!(v.iter().filter(|v| v.code == "negative-coefficient").count(), 1);
    }

    #[test]
    fn zero_floor_capacity_rejected() {
        let mut p = params();
        p.k = TimeFn::constant(1e-9);
        let v = p.validate(1.0, false);
        assert!(v.iter().any(|v| v.code == "capacity-floor"));
    }

    #[test]
    fn breakpoints_union() {
        let mut p = params();
        p.r = TimeFn::piecewise_constant(vec![2.0], vec![1.0, 2.0]);
        p.gamma = TimeFn::piecewise_constant(vec![1.0, 2.0], vec![0.0, 1.0, 0.5]);
        assert_eq!(p.breakpoints(0.0, 10.0), vec![1.0, 2.0]);
    }
}
