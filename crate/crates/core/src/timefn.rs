//! Piecewise-continuous, bounded coefficient functions of time.
//!
//! Every model coefficient (`r`, `d`, `γ`, `β`, `δ₁`, `δ₂`, `K`, `p₀`) is a
//! [`TimeFn`]. Piecewise-constant functions are right-continuous: at a
//! breakpoint they take the value of the interval that starts there.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, TAU};
use core::fmt;

use crate::quadrature::{self, QuadError};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "snake_case"))]
pub enum TimeFn {
    Constant {
        value: f64,
    },
    /// `mean + amplitude · sin(2πt/period + phase)`
    Sinusoid {
        mean: f64,
        amplitude: f64,
        period: f64,
        #[cfg_attr(feature = "serde", serde(default))]
        phase: f64,
    },
    /// `values[j]` on `[breakpoints[j-1], breakpoints[j])`, with the outer
    /// pieces extending to `±∞`.
    PiecewiseConstant {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
    /// Linear interpolation through `(t, value)` knots, holding the first and
    /// last values outside the knot range.
    PiecewiseLinear {
        knots: Vec<(f64, f64)>,
    },
    Sum {
        terms: Vec<TimeFn>,
    },
    Scaled {
        factor: f64,
        inner: Box<TimeFn>,
    },
    /// `scale · exp(inner(t))`; expresses capacities that are themselves
    /// infection-free solutions, e.g. `p(0)·exp(∫ r(1-δ₁))`.
    Exp {
        scale: f64,
        inner: Box<TimeFn>,
    },
}

/// Closed enclosure `[lower, upper]` of a function's range over `interval`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FunctionBounds {
    pub lower: f64,
    pub upper: f64,
    pub interval: (f64, f64),
}

impl FunctionBounds {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn is_finite(&self) -> bool {
        self.lower.is_finite() && self.upper.is_finite()
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lower && v <= self.upper
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TimeFnError {
    /// Evaluation requested at a negative or non-finite time.
    Domain {
        t: f64,
    },
    NonPositivePeriod {
        period: f64,
    },
    /// Breakpoints or knot abscissae are not strictly increasing.
    NotIncreasing {
        index: usize,
    },
    /// A piecewise-constant spec needs exactly one more value than breakpoints.
    ValueCount {
        breakpoints: usize,
        values: usize,
    },
    EmptyKnots,
    EmptySum,
    NonFiniteParameter,
    Quadrature(QuadError),
}

impl fmt::Display for TimeFnError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeFnError::Domain { t } => write!(f, "time function evaluated outside t >= 0 (t = {t})"),
            TimeFnError::NonPositivePeriod { period } => {
                write!(f, "sinusoid period must be positive, got {period}")
            }
            TimeFnError::NotIncreasing { index } => {
                write!(f, "breakpoints must be strictly increasing (index {index})")
            }
            TimeFnError::ValueCount { breakpoints, values } => {
                write!(f, "piecewise-constant spec has {breakpoints} breakpoints but {values} values (need one more)")
            }
            TimeFnError::EmptyKnots => write!(f, "piecewise-linear spec needs at least one knot"),
            TimeFnError::EmptySum => write!(f, "sum spec needs at least one term"),
            TimeFnError::NonFiniteParameter => write!(f, "time function has a non-finite parameter"),
            TimeFnError::Quadrature(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for TimeFnError {}

impl From<QuadError> for TimeFnError {
    fn from(e: QuadError) -> Self {
        TimeFnError::Quadrature(e)
    }
}

/// Which one-sided value to take at a jump.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Value of the piece that starts at `t` (the default convention).
    Right,
    /// Limit from the left; used at the end of an integration segment.
    Left,
}

impl TimeFn {
    pub fn constant(value: f64) -> Self {
        TimeFn::Constant { value }
    }

    pub fn sinusoid(mean: f64, amplitude: f64, period: f64, phase: f64) -> Self {
        TimeFn::Sinusoid { mean, amplitude, period, phase }
    }

    pub fn piecewise_constant(breakpoints: Vec<f64>, values: Vec<f64>) -> Self {
        TimeFn::PiecewiseConstant { breakpoints, values }
    }

    pub fn piecewise_linear(knots: Vec<(f64, f64)>) -> Self {
        TimeFn::PiecewiseLinear { knots }
    }

    pub fn sum(terms: Vec<TimeFn>) -> Self {
        TimeFn::Sum { terms }
    }

    pub fn scaled(factor: f64, inner: TimeFn) -> Self {
        TimeFn::Scaled { factor, inner: Box::new(inner) }
    }

    pub fn exp(scale: f64, inner: TimeFn) -> Self {
        TimeFn::Exp { scale, inner: Box::new(inner) }
    }

    /// Structural checks: finite parameters, positive periods, strictly
    /// increasing abscissae and matching value counts.
    pub fn validate(&self) -> Result<(), TimeFnError> {
        match self {
            TimeFn::Constant { value } => finite(&[*value]),
            TimeFn::Sinusoid { mean, amplitude, period, phase } => {
                finite(&[*mean, *amplitude, *period, *phase])?;
                if *period <= 0.0 {
                    return Err(TimeFnError::NonPositivePeriod { period: *period });
                }
                Ok(())
            }
            TimeFn::PiecewiseConstant { breakpoints, values } => {
                finite(breakpoints)?;
                finite(values)?;
                if values.len() != breakpoints.len() + 1 {
                    return Err(TimeFnError::ValueCount { breakpoints: breakpoints.len(), values: values.len() });
                }
                strictly_increasing(breakpoints.iter().copied())
            }
            TimeFn::PiecewiseLinear { knots } => {
                if knots.is_empty() {
                    return Err(TimeFnError::EmptyKnots);
                }
                for &(t, v) in knots {
                    finite(&[t, v])?;
                }
                strictly_increasing(knots.iter().map(|k| k.0))
            }
            TimeFn::Sum { terms } => {
                if terms.is_empty() {
                    return Err(TimeFnError::EmptySum);
                }
                terms.iter().try_for_each(TimeFn::validate)
            }
            TimeFn::Scaled { factor, inner } => {
                finite(&[*factor])?;
                inner.validate()
            }
            TimeFn::Exp { scale, inner } => {
                finite(&[*scale])?;
                inner.validate()
            }
        }
    }

    /// Checked evaluation; `t` must be finite and nonnegative.
    pub fn eval(&self, t: f64) -> Result<f64, TimeFnError> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(TimeFnError::Domain { t });
        }
        Ok(self.value(t))
    }

    /// Right-continuous value at `t` without domain checks.
    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        self.value_on(t, Side::Right)
    }

    /// Left limit at `t`. Differs from [`TimeFn::value`] only at jumps.
    #[inline]
    pub fn value_left(&self, t: f64) -> f64 {
        self.value_on(t, Side::Left)
    }

    pub fn value_on(&self, t: f64, side: Side) -> f64 {
        match self {
            TimeFn::Constant { value } => *value,
            TimeFn::Sinusoid { mean, amplitude, period, phase } => {
                mean + amplitude * libm::sin(TAU * t / period + phase)
            }
            TimeFn::PiecewiseConstant { breakpoints, values } => {
                let idx = match side {
                    Side::Right => breakpoints.partition_point(|&b| b <= t),
                    Side::Left => breakpoints.partition_point(|&b| b < t),
                };
                values[idx]
            }
            TimeFn::PiecewiseLinear { knots } => interpolate(knots, t),
            TimeFn::Sum { terms } => terms.iter().map(|f| f.value_on(t, side)).sum(),
            TimeFn::Scaled { factor, inner } => factor * inner.value_on(t, side),
            TimeFn::Exp { scale, inner } => scale * libm::exp(inner.value_on(t, side)),
        }
    }

    /// Points in the open interval `(t0, t1)` where the function may jump or
    /// lose smoothness. Sorted and deduplicated.
    pub fn breakpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        let mut out = Vec::new();
        self.collect_breakpoints(t0, t1, &mut out);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    pub(crate) fn collect_breakpoints(&self, t0: f64, t1: f64, out: &mut Vec<f64>) {
        match self {
            TimeFn::Constant { .. } | TimeFn::Sinusoid { .. } => {}
            TimeFn::PiecewiseConstant { breakpoints, .. } => {
                out.extend(breakpoints.iter().copied().filter(|&b| b > t0 && b < t1));
            }
            TimeFn::PiecewiseLinear { knots } => {
                out.extend(knots.iter().map(|k| k.0).filter(|&b| b > t0 && b < t1));
            }
            TimeFn::Sum { terms } => terms.iter().for_each(|f| f.collect_breakpoints(t0, t1, out)),
            TimeFn::Scaled { inner, .. } | TimeFn::Exp { inner, .. } => inner.collect_breakpoints(t0, t1, out),
        }
    }

    /// `∫_{t0}^{t1} f(t) dt` by adaptive quadrature, splitting at breakpoints.
    pub fn integrate(&self, t0: f64, t1: f64, tol: f64) -> Result<f64, TimeFnError> {
        if !(t0 >= 0.0) || !(t1 >= t0) || !t1.is_finite() {
            return Err(TimeFnError::Domain { t: if t0 < 0.0 { t0 } else { t1 } });
        }
        let breaks = self.breakpoints(t0, t1);
        let r = quadrature::integrate(|t| self.value(t), t0, t1, &breaks, tol)?;
        Ok(r.value)
    }

    /// Analytic enclosure of the range of `f` over `[t0, t1]`.
    ///
    /// Constants, linear pieces and sinusoid extrema are exact; sums add the
    /// enclosures of their terms, so they may be wider than the true range.
    pub fn bounds_over(&self, t0: f64, t1: f64) -> FunctionBounds {
        let (t0, t1) = if t1 < t0 { (t1, t0) } else { (t0, t1) };
        let (lower, upper) = self.range(t0, t1);
        FunctionBounds { lower, upper, interval: (t0, t1) }
    }

    fn range(&self, t0: f64, t1: f64) -> (f64, f64) {
        match self {
            TimeFn::Constant { value } => (*value, *value),
            TimeFn::Sinusoid { mean, amplitude, period, phase } => {
                let th0 = TAU * t0 / period + phase;
                let th1 = TAU * t1 / period + phase;
                let (smin, smax) = sin_range(th0, th1);
                let (a, b) = (mean + amplitude * smin, mean + amplitude * smax);
                if a <= b {
                    (a, b)
                } else {
                    (b, a)
                }
            }
            TimeFn::PiecewiseConstant { breakpoints, values } => {
                let first = breakpoints.partition_point(|&b| b <= t0);
                let last = breakpoints.partition_point(|&b| b <= t1);
                values[first..=last]
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
            }
            TimeFn::PiecewiseLinear { knots } => {
                let mut lo = interpolate(knots, t0).min(interpolate(knots, t1));
                let mut hi = interpolate(knots, t0).max(interpolate(knots, t1));
                for &(_, v) in knots.iter().filter(|k| k.0 > t0 && k.0 < t1) {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                (lo, hi)
            }
            TimeFn::Sum { terms } => terms.iter().fold((0.0, 0.0), |(lo, hi), f| {
                let (a, b) = f.range(t0, t1);
                (lo + a, hi + b)
            }),
            TimeFn::Scaled { factor, inner } => {
                let (a, b) = inner.range(t0, t1);
                let (a, b) = (factor * a, factor * b);
                if a <= b {
                    (a, b)
                } else {
                    (b, a)
                }
            }
            TimeFn::Exp { scale, inner } => {
                let (a, b) = inner.range(t0, t1);
                let (a, b) = (scale * libm::exp(a), scale * libm::exp(b));
                if a <= b {
                    (a, b)
                } else {
                    (b, a)
                }
            }
        }
    }

    /// Period of a bare sinusoid, if this is one.
    pub fn period(&self) -> Option<f64> {
        match self {
            TimeFn::Sinusoid { period, .. } => Some(*period),
            _ => None,
        }
    }
}

fn finite(xs: &[f64]) -> Result<(), TimeFnError> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(TimeFnError::NonFiniteParameter)
    }
}

fn strictly_increasing(mut xs: impl Iterator<Item = f64>) -> Result<(), TimeFnError> {
    let Some(mut prev) = xs.next() else { return Ok(()) };
    for (i, x) in xs.enumerate() {
        if x <= prev {
            return Err(TimeFnError::NotIncreasing { index: i + 1 });
        }
        prev = x;
    }
    Ok(())
}

fn interpolate(knots: &[(f64, f64)], t: f64) -> f64 {
    let idx = knots.partition_point(|k| k.0 <= t);
    if idx == 0 {
        return knots[0].1;
    }
    if idx == knots.len() {
        return knots[knots.len() - 1].1;
    }
    let (ta, va) = knots[idx - 1];
    let (tb, vb) = knots[idx];
    va + (vb - va) * (t - ta) / (tb - ta)
}

/// Range of `sin` over `[a, b]`.
fn sin_range(a: f64, b: f64) -> (f64, f64) {
    if b - a >= TAU {
        return (-1.0, 1.0);
    }
    let (sa, sb) = (libm::sin(a), libm::sin(b));
    let mut lo = sa.min(sb);
    let mut hi = sa.max(sb);
    // crest at π/2 + 2πk, trough at 3π/2 + 2πk
    let k = libm::ceil((a - FRAC_PI_2) / TAU);
    if FRAC_PI_2 + TAU * k <= b {
        hi = 1.0;
    }
    let k = libm::ceil((a - 3.0 * FRAC_PI_2) / TAU);
    if 3.0 * FRAC_PI_2 + TAU * k <= b {
        lo = -1.0;
    }
    (lo, hi)
}
