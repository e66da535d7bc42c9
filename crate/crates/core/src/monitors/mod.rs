//! Finite-horizon evaluation of qualitative conditions along a trajectory.
//!
//! Each check reports two verdicts: whether its hypothesis holds on the
//! simulated window and whether the promised behaviour is observed. A
//! conclusion is only `No` when the data contradict it outright; weak or
//! ambiguous evidence gives `Undetermined`. Limits `t → ∞` are replaced by
//! the tail window `[t_end(1 - tail_fraction), t_end]`.

mod checks;
pub mod oracles;
pub mod sign;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::integrator::{Scenario, Trajectory};
use crate::model::{Coefficients, ModelParams, State};
use crate::quadrature;
use crate::settings::Thresholds;
use crate::timefn::{FunctionBounds, TimeFn};

pub use checks::{log_contraction_criterion, LogContraction};
pub use oracles::{
    closed_form_i, closed_form_n, fundamental_matrix, Cumulative, FundamentalMatrix, OracleError, OracleValue,
    TrajectoryOracles,
};
pub use sign::{Interval, Sign, SignPartition};

#[cfg(feature = "serde")]
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Verdict {
    Yes,
    No,
    Undetermined,
}

impl Verdict {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Verdict::Yes
        } else {
            Verdict::No
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Verdict::Yes => "yes",
            Verdict::No => "no",
            Verdict::Undetermined => "undetermined",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

macro_rules! registry {
    ($($variant:ident => $id:literal, $what:literal;)*) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum CheckId {
            $($variant,)*
        }

        impl CheckId {
            pub const ALL: &'static [CheckId] = &[$(CheckId::$variant,)*];

            pub fn id(self) -> &'static str {
                match self {
                    $(CheckId::$variant => $id,)*
                }
            }

            /// One-line statement of what the check asserts.
            pub fn statement(self) -> &'static str {
                match self {
                    $(CheckId::$variant => $what,)*
                }
            }

            pub fn parse(s: &str) -> Option<CheckId> {
                match s {
                    $($id => Some(CheckId::$variant),)*
                    _ => None,
                }
            }
        }
    };
}

registry! {
    Positivity => "positivity",
        "nonnegative data and recovery keep S, I nonnegative; zero components stay zero";
    NegativeRecoveryPositivity => "negative_recovery_positivity",
        "S stays nonnegative while the negative-recovery mass is dominated";
    InfectionFreeIntegrableGrowth => "infection_free_integrable_growth",
        "infection-free with integrable growth rate implies bounded N";
    InfectionFreeExponentialExtinction => "infection_free_exponential_extinction",
        "infection-free with negative mean growth implies exponential decay of N";
    SusceptibleFreeRegime => "susceptible_free_regime",
        "S(0) = 0 and zero recovery keep S identically zero";
    BoundedPositiveRates => "bounded_positive_rates",
        "positive incidence weight, death and growth rates bound N";
    BoundedDeathDominance => "bounded_death_dominance",
        "death dominating a vanishing growth rate bounds N";
    VanishingPopulations => "vanishing_populations",
        "divergent negative growth integral drives N to zero";
    InfectedExponentialDecay => "infected_exponential_decay",
        "death plus recovery beating transmission decays I exponentially";
    BoundedTotalSmallDelta2 => "bounded_total_small_delta2",
        "small infected incidence weight bounds N";
    BoundedRatioCondition => "bounded_ratio_condition",
        "d/r below S/I bounds N";
    IntegrableGrowthBounds => "integrable_growth_bounds",
        "growth integral bounded above bounds N";
    ZeroEquilibriumInstability => "zero_equilibrium_instability",
        "d/r below S/I keeps the trajectory away from the origin";
    UltimateBoundedness => "ultimate_boundedness",
        "d/r below S/I gives an ultimate bound on N";
    InfectedUnboundedGrowth => "infected_unbounded_growth",
        "persistently positive infected growth rate makes I unbounded";
    NoZeroSusceptible => "no_zero_susceptible",
        "positive recovery with infection present forbids S identically zero";
    InfectionFreeOscillation => "infection_free_oscillation",
        "infection-free logistic factor changing sign makes N oscillate";
    InvariantSetOmega => "invariant_set_omega",
        "N(0) below sup p/delta_m keeps N below it";
    InvariantSetOmegaE => "invariant_set_omega_e",
        "nonincreasing-N conditions keep N below N(0)";
    ImpulsiveBoundedPositiveDelta => "impulsive_bounded_positive_delta",
        "positive incidence weights bound N under pulse culling";
    ImpulsiveLogContraction => "impulsive_log_contraction",
        "culling that outpaces growth in the log balance bounds N";
}

#[cfg(feature = "serde")]
impl Serialize for CheckId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.id())
    }
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct Evidence {
    pub name: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct ConditionEntry {
    pub check: CheckId,
    pub hypothesis: Verdict,
    pub conclusion: Verdict,
    pub evidence: Vec<Evidence>,
    pub notes: Vec<String>,
    /// The verdicts rest on tail-window surrogates for limits.
    pub finite_horizon: bool,
}

impl ConditionEntry {
    /// Hypothesis satisfied but conclusion contradicted.
    pub fn is_violation(&self) -> bool {
        self.hypothesis == Verdict::Yes && self.conclusion == Verdict::No
    }

    pub fn evidence(&self, name: &str) -> Option<f64> {
        self.evidence.iter().find(|e| e.name == name).map(|e| e.value)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct ConditionReport {
    pub entries: Vec<ConditionEntry>,
}

impl ConditionReport {
    pub fn violations(&self) -> impl Iterator<Item = &ConditionEntry> {
        self.entries.iter().filter(|e| e.is_violation())
    }

    pub fn get(&self, check: CheckId) -> Option<&ConditionEntry> {
        self.entries.iter().find(|e| e.check == check)
    }
}

/// Runs the selected checks (all when `selection` is empty) in registry
/// order, each exactly once.
pub fn evaluate(scenario: &Scenario, traj: &Trajectory, selection: &[CheckId]) -> ConditionReport {
    let cx = Context::new(scenario, traj);
    let entries = CheckId::ALL
        .iter()
        .copied()
        .filter(|c| selection.is_empty() || selection.contains(c))
        .map(|c| checks::run(&cx, c))
        .collect();
    ConditionReport { entries }
}

/// One point of the monitoring series: every step end (left limit) plus
/// the post-impulse state at each impulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Point {
    pub t: f64,
    pub x: State,
    pub post: bool,
}

pub(crate) struct Context<'a> {
    pub scenario: &'a Scenario,
    pub traj: &'a Trajectory,
    pub th: Thresholds,
    pub series: Vec<Point>,
    pub end: f64,
    pub t_tail: f64,
    pub tail_len: f64,
    pub n0: f64,
    pub n_max: f64,
    pub n_max_pre: f64,
    pub n_max_tail: f64,
}

impl<'a> Context<'a> {
    pub fn new(scenario: &'a Scenario, traj: &'a Trajectory) -> Self {
        let mut series = Vec::with_capacity(traj.dense_steps().len() + traj.impulses.len() + 1);
        series.push(Point { t: 0.0, x: traj.initial, post: false });
        let mut imp = traj.impulses.iter().peekable();
        // impulse at t = 0 acts before the first step
        while let Some(r) = imp.peek() {
            if r.t > 0.0 {
                break;
            }
            series.push(Point { t: r.t, x: r.after, post: true });
            imp.next();
        }
        for step in traj.dense_steps() {
            if step.t1 <= step.t0 {
                continue;
            }
            series.push(Point { t: step.t1, x: step.eval(step.t1), post: false });
            while let Some(r) = imp.peek() {
                if r.t > step.t1 {
                    break;
                }
                if r.t == step.t1 {
                    series.push(Point { t: r.t, x: r.after, post: true });
                }
                imp.next();
            }
        }
        let th = scenario.thresholds;
        let end = traj.end;
        let t_tail = end * (1.0 - th.tail_fraction);
        let n0 = traj.initial.n();
        let mut n_max = f64::NEG_INFINITY;
        let mut n_max_pre = f64::NEG_INFINITY;
        let mut n_max_tail = f64::NEG_INFINITY;
        for p in &series {
            let n = p.x.n();
            n_max = n_max.max(n);
            if p.t < t_tail {
                n_max_pre = n_max_pre.max(n);
            } else {
                n_max_tail = n_max_tail.max(n);
            }
        }
        Self {
            scenario,
            traj,
            th,
            series,
            end,
            t_tail,
            tail_len: end - t_tail,
            n0,
            n_max,
            n_max_pre: n_max_pre.max(n0),
            n_max_tail,
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.scenario.params
    }

    pub fn initial(&self) -> State {
        self.traj.initial
    }

    pub fn coeff(&self, t: f64) -> Coefficients {
        self.params().coefficients_at(t)
    }

    pub fn over_horizon(&self, f: &TimeFn) -> FunctionBounds {
        f.bounds_over(0.0, self.end)
    }

    pub fn over_tail(&self, f: &TimeFn) -> FunctionBounds {
        f.bounds_over(self.t_tail, self.end)
    }

    pub fn capacity_over(&self, t0: f64, t1: f64) -> FunctionBounds {
        self.params().capacity_fn().bounds_over(t0, t1)
    }

    pub fn tail(&self) -> impl Iterator<Item = &Point> {
        self.series.iter().filter(move |p| p.t >= self.t_tail)
    }

    pub fn state_at(&self, t: f64) -> State {
        self.traj.state_at(t).unwrap_or(State::ZERO)
    }

    pub fn final_state(&self) -> State {
        self.series.last().map(|p| p.x).unwrap_or(self.traj.initial)
    }

    /// Whether any nontrivial impulse acts within the integrated window.
    pub fn impulsive(&self) -> bool {
        self.traj.impulses.iter().any(|r| r.p > 0.0 || r.q > 0.0)
    }

    pub fn neg_tol(&self) -> f64 {
        self.th.neg_tol(self.n0)
    }

    pub fn inv_slack(&self, bound: f64) -> f64 {
        self.th.inv_tol * (1.0 + self.n0) + 1e-9 * bound.abs()
    }

    /// Integral along the trajectory of `f(t, x(t), coefficients(t))`.
    pub fn integral<F>(&self, f: F, a: f64, b: f64) -> Option<f64>
    where
        F: Fn(f64, State, &Coefficients) -> f64,
    {
        if !(b > a) {
            return Some(0.0);
        }
        let breaks = self.traj.step_breaks(a, b);
        let g = |t: f64| {
            let x = self.state_at(t);
            f(t, x, &self.coeff(t))
        };
        let tol = self.th.quad_tol * (1.0 + (b - a));
        match quadrature::integrate(g, a, b, &breaks, tol) {
            Ok(r) => Some(r.value),
            Err(quadrature::QuadError::NotConverged { value, abs_error })
                if abs_error <= 1e-6 * (1.0 + value.abs()) =>
            {
                Some(value)
            }
            Err(_) => None,
        }
    }

    /// Tail-flatness test for boundedness. `scale`, when known, is a level
    /// the hypothesis guarantees up to a constant; exceeding it by
    /// `unbounded_factor` contradicts boundedness.
    pub fn bounded_verdict(&self, scale: Option<f64>) -> Verdict {
        if let Some(sc) = scale {
            if sc.is_finite() && self.n_max > self.th.unbounded_factor * self.n0.max(sc) {
                return Verdict::No;
            }
        }
        if !self.n_max.is_finite() {
            return Verdict::Undetermined;
        }
        if self.n_max_tail <= self.th.growth_tol * self.n_max_pre.max(0.0) {
            Verdict::Yes
        } else {
            Verdict::Undetermined
        }
    }

    /// `N ≤ bound` at every monitored point, up to the containment slack.
    pub fn within_bound(&self, bound: f64) -> Verdict {
        Verdict::from_bool(self.n_max <= bound + self.inv_slack(bound))
    }

    /// Decay of a positive quantity from `start` to `end` over the tail.
    /// `required` is the log-drop the hypothesis guarantees.
    pub fn decay_verdict(&self, start: f64, end: f64, required: f64) -> Verdict {
        if start <= 0.0 {
            return if end <= 0.0 { Verdict::Yes } else { Verdict::Undetermined };
        }
        // below the integrator's absolute resolution the sign of a change is noise
        let floor = RESOLUTION_FACTOR * self.scenario.tolerances.abs;
        if end <= floor {
            return if start > floor { Verdict::Yes } else { Verdict::Undetermined };
        }
        if end >= start {
            return Verdict::No;
        }
        if end <= 0.0 || libm::log(end / start) <= -0.5 * required {
            Verdict::Yes
        } else {
            Verdict::Undetermined
        }
    }
}

/// Multiple of the absolute tolerance below which magnitudes are unresolved.
pub(crate) const RESOLUTION_FACTOR: f64 = 1e3;

pub(crate) fn ev(name: &'static str, value: f64) -> Evidence {
    Evidence { name, value }
}

pub(crate) fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}
