//! Numerical core for a time-varying SIS epidemic model with a nonlinear
//! incidence `G = δ₁(t)S + δ₂(t)I`, logistic susceptible growth against a
//! carrying capacity `p(t) = K(t) + p₀(t)`, and scheduled pulse culling of
//! both compartments.
//!
//! The crate is `no_std` (it needs `alloc`) and carries no I/O. It provides:
//!
//! * [`timefn`]: piecewise-continuous coefficient functions with exact
//!   evaluation, breakpoint-aware quadrature and analytic range enclosures;
//! * [`model`]: the vector field, incidence and carrying capacity;
//! * [`integrator`]: an adaptive Dormand–Prince 5(4) integrator that lands
//!   exactly on impulse instants and coefficient breakpoints;
//! * [`analysis`]: the constant-coefficient limiting system (equilibria,
//!   Jacobians, stability labels) plus periodic-capacity and infection-free
//!   stability checks;
//! * [`monitors`]: finite-horizon evaluation of positivity, boundedness,
//!   oscillation and invariance conditions along a trajectory, and the
//!   closed-form solution oracles.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod integrator;
pub mod model;
pub mod monitors;
pub mod quadrature;
pub mod settings;
pub mod timefn;

pub use analysis::{Equilibrium, EquilibriumKind, LimitingParams, Stability};
pub use integrator::{
    apply_impulse, integrate, ImpulseEvent, ImpulseSchedule, IntegrationError, Scenario, Tolerances, Trajectory,
};
pub use model::{Coefficients, ModelError, ModelParams, State};
pub use monitors::{CheckId, ConditionEntry, ConditionReport, Verdict};
pub use settings::{Thresholds, WeightRule};
pub use timefn::{FunctionBounds, TimeFn, TimeFnError};
