//! Closed-form reconstructions of a simulated trajectory.
//!
//! Between impulses the infected equation is linear in `I` and the total
//! population satisfies `N' = aN - (a + d)I` with `a = r(1 - G/p)`, so both
//! can be recovered from integrals of the coefficients along the computed
//! path. Restarts happen at the last impulse before the evaluation time.

use alloc::vec::Vec;
use core::fmt;

use crate::integrator::Trajectory;
use crate::model::{Coefficients, ModelParams, State};
use crate::quadrature::{self, QuadError};

#[cfg(feature = "serde")]
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleError {
    /// Requested time lies outside the integrated interval.
    Domain {
        t: f64,
        end: f64,
    },
    Quadrature(QuadError),
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::Domain { t, end } => write!(f, "time {t} outside [0, {end}]"),
            OracleError::Quadrature(e) => write!(f, "quadrature failed: {e}"),
        }
    }
}

impl core::error::Error for OracleError {}

impl From<QuadError> for OracleError {
    fn from(e: QuadError) -> Self {
        OracleError::Quadrature(e)
    }
}

/// Running integral of `f` tabulated at knots, evaluated anywhere by adding
/// the partial integral from the nearest knot below.
#[derive(Debug, Clone)]
pub struct Cumulative {
    knots: Vec<f64>,
    values: Vec<f64>,
    tol_density: f64,
    pub abs_error: f64,
}

impl Cumulative {
    /// `knots` must be sorted and start at the lower integration limit.
    /// `tol` is the absolute accuracy target over the whole span.
    pub fn build<F: Fn(f64) -> f64>(knots: Vec<f64>, f: &F, tol: f64) -> Result<Self, QuadError> {
        let span = match (knots.first(), knots.last()) {
            (Some(a), Some(b)) if b > a => b - a,
            _ => 1.0,
        };
        let tol_density = tol / span;
        let mut values = Vec::with_capacity(knots.len());
        let mut acc = 0.0;
        let mut err = 0.0;
        values.push(0.0);
        for w in knots.windows(2) {
            let r = piece(f, w[0], w[1], tol_density)?;
            acc += r.value;
            err += r.abs_error;
            values.push(acc);
        }
        Ok(Self { knots, values, tol_density, abs_error: err })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Integral from the first knot to `s`.
    pub fn at<F: Fn(f64) -> f64>(&self, s: f64, f: &F) -> Result<f64, QuadError> {
        let j = self.knots.partition_point(|&k| k <= s);
        if j == 0 {
            return Ok(0.0);
        }
        let base = self.knots[j - 1];
        if s == base {
            return Ok(self.values[j - 1]);
        }
        Ok(self.values[j - 1] + piece(f, base, s, self.tol_density)?.value)
    }
}

fn piece<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol_density: f64) -> Result<quadrature::QuadResult, QuadError> {
    let tol = (tol_density * (b - a)).max(1e-300);
    match quadrature::integrate(f, a, b, &[], tol) {
        Ok(r) => Ok(r),
        // roundoff-limited pieces are accurate enough for tabulation
        Err(QuadError::NotConverged { value, abs_error }) if abs_error <= 1e3 * tol.max(1e-15) => {
            Ok(quadrature::QuadResult { value, abs_error })
        }
        Err(e) => Err(e),
    }
}

/// Value with a conditioning estimate: the ratio of the magnitude of the
/// summed terms to the result. Large values mean cancellation.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct OracleValue {
    pub value: f64,
    pub condition: f64,
}

impl OracleValue {
    /// True when relative perturbations of size `rel` in the inputs can
    /// move the result by more than `limit` relatively.
    pub fn ill_conditioned(&self, rel: f64, limit: f64) -> bool {
        !(self.condition * rel <= limit)
    }
}

/// Solution operator of the linearised system along the trajectory, from
/// the last restart `t_base` to `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct FundamentalMatrix {
    pub t: f64,
    pub t_base: f64,
    pub psi11: f64,
    pub psi12: f64,
    pub psi22: f64,
}

impl FundamentalMatrix {
    pub fn apply(&self, base: State) -> State {
        State::new(self.psi11 * base.s + self.psi12 * base.i, self.psi22 * base.i)
    }
}

/// Coefficient integrals along one trajectory, tabulated once.
pub struct TrajectoryOracles<'a> {
    traj: &'a Trajectory,
    params: &'a ModelParams,
    infected: Cumulative,
    logistic: Cumulative,
    susceptible: Cumulative,
    total_kernel: Cumulative,
    cross_kernel: Cumulative,
}

fn state(traj: &Trajectory, t: f64) -> State {
    traj.state_at(t).unwrap_or(State::ZERO)
}

fn coeff(params: &ModelParams, t: f64) -> Coefficients {
    params.coefficients_at(t)
}

impl<'a> TrajectoryOracles<'a> {
    pub fn new(traj: &'a Trajectory, params: &'a ModelParams, tol: f64) -> Result<Self, OracleError> {
        let knots = Self::mesh(traj);
        let infected = Cumulative::build(knots.clone(), &|t| rate_infected(traj, params, t), tol)?;
        let logistic = Cumulative::build(knots.clone(), &|t| rate_logistic(traj, params, t), tol)?;
        let susceptible = Cumulative::build(knots.clone(), &|t| rate_susceptible(traj, params, t), tol)?;
        let total_kernel =
            Cumulative::build(knots.clone(), &|t| total_kernel(traj, params, &infected, &logistic, t), tol)?;
        let cross_kernel = Cumulative::build(knots, &|t| cross_kernel(traj, params, &infected, &susceptible, t), tol)?;
        Ok(Self { traj, params, infected, logistic, susceptible, total_kernel, cross_kernel })
    }

    /// `0`, every step end, deduplicated.
    pub fn mesh(traj: &Trajectory) -> Vec<f64> {
        let mut knots = Vec::with_capacity(traj.dense_steps().len() + 1);
        knots.push(0.0);
        for s in traj.dense_steps() {
            if s.t1 > *knots.last().expect("nonempty") {
                knots.push(s.t1);
            }
        }
        knots
    }

    fn check(&self, t: f64) -> Result<(), OracleError> {
        if t >= 0.0 && t <= self.traj.end {
            Ok(())
        } else {
            Err(OracleError::Domain { t, end: self.traj.end })
        }
    }

    /// `∫₀ᵗ (βS - d - γ)`.
    pub fn infected_exponent(&self, t: f64) -> Result<f64, OracleError> {
        self.check(t)?;
        Ok(self.infected.at(t, &|s| rate_infected(self.traj, self.params, s))?)
    }

    /// `∫₀ᵗ r(1 - G/p)`.
    pub fn logistic_exponent(&self, t: f64) -> Result<f64, OracleError> {
        self.check(t)?;
        Ok(self.logistic.at(t, &|s| rate_logistic(self.traj, self.params, s))?)
    }

    /// `∫₀ᵗ (r(1 - G/p) - βI)`.
    pub fn susceptible_exponent(&self, t: f64) -> Result<f64, OracleError> {
        self.check(t)?;
        Ok(self.susceptible.at(t, &|s| rate_susceptible(self.traj, self.params, s))?)
    }

    /// `I(t) = I_b exp ∫_{t_b}^t (βS - d - γ)`.
    pub fn infected(&self, t: f64) -> Result<f64, OracleError> {
        let (tb, base) = self.traj.restart_base(t);
        let e = self.infected_exponent(t)? - self.infected_exponent(tb)?;
        Ok(base.i * libm::exp(e))
    }

    /// `N(t) = e^{A(t)} [N_b - I_b ∫_{t_b}^t e^{-A(s)} (a + d)(s) E(s) ds]`,
    /// exponents measured from `t_b`.
    pub fn total(&self, t: f64) -> Result<OracleValue, OracleError> {
        self.check(t)?;
        let (tb, base) = self.traj.restart_base(t);
        let da = self.logistic_exponent(t)? - self.logistic_exponent(tb)?;
        let k = |s: f64| total_kernel(self.traj, self.params, &self.infected, &self.logistic, s);
        let q = self.total_kernel.at(t, &k)? - self.total_kernel.at(tb, &k)?;
        let growth = libm::exp(da);
        let value = growth * (base.n() - base.i * q);
        let scale = growth * (base.n().abs() + (base.i * q).abs());
        Ok(OracleValue { value, condition: conditioning(scale, value) })
    }

    pub fn fundamental(&self, t: f64) -> Result<FundamentalMatrix, OracleError> {
        self.check(t)?;
        let (tb, _) = self.traj.restart_base(t);
        let df = self.susceptible_exponent(t)? - self.susceptible_exponent(tb)?;
        let de = self.infected_exponent(t)? - self.infected_exponent(tb)?;
        let k = |s: f64| cross_kernel(self.traj, self.params, &self.infected, &self.susceptible, s);
        let q = self.cross_kernel.at(t, &k)? - self.cross_kernel.at(tb, &k)?;
        let psi11 = libm::exp(df);
        Ok(FundamentalMatrix { t, t_base: tb, psi11, psi12: psi11 * q, psi22: libm::exp(de) })
    }

    /// Full state from the fundamental matrix and the restart state.
    pub fn reconstruct(&self, t: f64) -> Result<State, OracleError> {
        let m = self.fundamental(t)?;
        Ok(m.apply(self.traj.restart_base(t).1))
    }

    pub fn quadrature_error(&self) -> f64 {
        self.infected.abs_error
            + self.logistic.abs_error
            + self.susceptible.abs_error
            + self.total_kernel.abs_error
            + self.cross_kernel.abs_error
    }
}

fn conditioning(scale: f64, value: f64) -> f64 {
    if scale == 0.0 {
        1.0
    } else if value == 0.0 {
        f64::INFINITY
    } else {
        (scale / value.abs()).max(1.0)
    }
}

fn rate_infected(traj: &Trajectory, params: &ModelParams, t: f64) -> f64 {
    coeff(params, t).infected_rate(state(traj, t))
}

fn rate_logistic(traj: &Trajectory, params: &ModelParams, t: f64) -> f64 {
    coeff(params, t).logistic_factor(state(traj, t))
}

fn rate_susceptible(traj: &Trajectory, params: &ModelParams, t: f64) -> f64 {
    let c = coeff(params, t);
    let x = state(traj, t);
    c.logistic_factor(x) - c.beta * x.i
}

fn total_kernel(traj: &Trajectory, params: &ModelParams, inf: &Cumulative, log: &Cumulative, s: f64) -> f64 {
    let (tb, _) = traj.restart_base(s);
    let c = coeff(params, s);
    let x = state(traj, s);
    let ri = |u: f64| rate_infected(traj, params, u);
    let rl = |u: f64| rate_logistic(traj, params, u);
    let (e, eb) = (inf.at(s, &ri).unwrap_or(f64::NAN), inf.at(tb, &ri).unwrap_or(f64::NAN));
    let (a, ab) = (log.at(s, &rl).unwrap_or(f64::NAN), log.at(tb, &rl).unwrap_or(f64::NAN));
    libm::exp((e - eb) - (a - ab)) * (c.logistic_factor(x) + c.d)
}

fn cross_kernel(traj: &Trajectory, params: &ModelParams, inf: &Cumulative, sus: &Cumulative, s: f64) -> f64 {
    let (tb, _) = traj.restart_base(s);
    let c = coeff(params, s);
    let ri = |u: f64| rate_infected(traj, params, u);
    let rs = |u: f64| rate_susceptible(traj, params, u);
    let (e, eb) = (inf.at(s, &ri).unwrap_or(f64::NAN), inf.at(tb, &ri).unwrap_or(f64::NAN));
    let (f, fb) = (sus.at(s, &rs).unwrap_or(f64::NAN), sus.at(tb, &rs).unwrap_or(f64::NAN));
    libm::exp((e - eb) - (f - fb)) * c.gamma
}

/// Closed-form `I(t)` along `traj`.
pub fn closed_form_i(traj: &Trajectory, params: &ModelParams, t: f64, tol: f64) -> Result<f64, OracleError> {
    TrajectoryOracles::new(traj, params, tol)?.infected(t)
}

/// Closed-form `N(t)` along `traj`, with its conditioning estimate.
pub fn closed_form_n(traj: &Trajectory, params: &ModelParams, t: f64, tol: f64) -> Result<OracleValue, OracleError> {
    TrajectoryOracles::new(traj, params, tol)?.total(t)
}

pub fn fundamental_matrix(
    traj: &Trajectory,
    params: &ModelParams,
    t: f64,
    tol: f64,
) -> Result<FundamentalMatrix, OracleError> {
    TrajectoryOracles::new(traj, params, tol)?.fundamental(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{integrate, ImpulseEvent, ImpulseSchedule, Scenario};
    use crate::timefn::TimeFn;
    use alloc::vec;

    fn scenario() -> Scenario {
        let mut p = ModelParams::constant(0.8, 0.3, 0.2, 0.01, 0.02, 0.01, 80.0);
        p.beta = TimeFn::sinusoid(0.01, 0.004, 3.0, 0.0);
        Scenario::new(p, State::new(30.0, 5.0), 6.0)
    }

    #[test]
    fn cumulative_matches_direct_integral() {
        let knots: Vec<f64> = (0..=10).map(|k| k as f64 * 0.3).collect();
        let f = |t: f64| libm::cos(t);
        let c = Cumulative::build(knots, &f, 1e-12).unwrap();
        for &s in &[0.0, 0.45, 1.2, 2.99, 3.0] {
            assert!((c.at(s, &f).unwrap() - libm::sin(s)).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_forms_track_simulation() {
        let sc = scenario();
        let tr = integrate(&sc).unwrap();
        let o = TrajectoryOracles::new(&tr, &sc.params, 1e-11).unwrap();
        for &t in &[0.0, 1.0, 2.5, 6.0] {
            let x = tr.state_at(t).unwrap();
            assert!((o.infected(t).unwrap() - x.i).abs() <= 1e-7 * x.i);
            assert!((o.total(t).unwrap().value - x.n()).abs() <= 1e-7 * x.n());
            let y = o.reconstruct(t).unwrap();
            assert!((y.s - x.s).abs() <= 1e-7 * x.s);
        }
        let m = o.fundamental(0.0).unwrap();
        assert_eq!((m.psi11, m.psi12, m.psi22), (1.0, 0.0, 1.0));
    }

    #[test]
    fn closed_forms_restart_after_impulses() {
        let sc = scenario().with_schedule(ImpulseSchedule::new(
            1.0,
            vec![ImpulseEvent::new(2.0, 0.3, 0.5), ImpulseEvent::new(4.0, 0.1, 0.2)],
        ));
        let tr = integrate(&sc).unwrap();
        let o = TrajectoryOracles::new(&tr, &sc.params, 1e-11).unwrap();
        for &t in &[1.9, 2.0, 2.1, 4.0, 5.5] {
            let x = tr.state_at(t).unwrap();
            assert!((o.infected(t).unwrap() - x.i).abs() <= 1e-7 * x.i, "t={t}");
            assert!((o.total(t).unwrap().value - x.n()).abs() <= 1e-7 * x.n(), "t={t}");
        }
    }

    #[test]
    fn outside_domain_is_rejected() {
        let sc = scenario();
        let tr = integrate(&sc).unwrap();
        let o = TrajectoryOracles::new(&tr, &sc.params, 1e-10).unwrap();
        assert!(matches!(o.infected(7.0), Err(OracleError::Domain { .. })));
    }
}
