//! Dormand–Prince 5(4) integration of the SIS field with scheduled culling.
//!
//! Impulse instants and coefficient breakpoints split the horizon into
//! segments on which the right-hand side is smooth. Each segment is
//! integrated on its own and the last stage of a segment reads the
//! coefficients' left limits, so jumps never leak into an error estimate.
//! The state is never clamped.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use crate::model::{ModelError, ModelParams, State, Violation};
use crate::settings::{Thresholds, WeightRule};
use crate::timefn::Side;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

type V = [f64; 2];

/// One scheduled cull: fractions `p` of the susceptibles and `q` of the
/// infected are removed at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ImpulseEvent {
    pub t: f64,
    pub p: f64,
    pub q: f64,
}

impl ImpulseEvent {
    pub fn new(t: f64, p: f64, q: f64) -> Self {
        Self { t, p, q }
    }

    /// Neither compartment is touched.
    pub fn is_null(&self) -> bool {
        self.p == 0.0 && self.q == 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ImpulseSchedule {
    /// Minimum spacing `T` between consecutive events.
    #[cfg_attr(feature = "serde", serde(rename = "T"))]
    pub min_gap: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub events: Vec<ImpulseEvent>,
}

impl Default for ImpulseSchedule {
    fn default() -> Self {
        Self { min_gap: 1.0, events: Vec::new() }
    }
}

impl ImpulseSchedule {
    pub fn new(min_gap: f64, events: Vec<ImpulseEvent>) -> Self {
        Self { min_gap, events }
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Events at or before `horizon`.
    pub fn within(&self, horizon: f64) -> impl Iterator<Item = (usize, &ImpulseEvent)> {
        self.events.iter().enumerate().filter(move |(_, e)| e.t <= horizon)
    }

    /// Every offending event index, not just the first.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.min_gap > 0.0) || !self.min_gap.is_finite() {
            out.push(Violation::new(
                "impulse-gap",
                format!("minimum impulse spacing T must be positive and finite, got {}", self.min_gap),
            ));
        }
        for (k, e) in self.events.iter().enumerate() {
            if !(e.t >= 0.0) || !e.t.is_finite() {
                out.push(Violation::new("impulse-time", format!("event {k}: time {} is not a finite t >= 0", e.t)));
            }
            if !(0.0..=1.0).contains(&e.p) {
                out.push(Violation::new("impulse-fraction", format!("event {k}: p = {} outside [0, 1]", e.p)));
            }
            if !(0.0..=1.0).contains(&e.q) {
                out.push(Violation::new("impulse-fraction", format!("event {k}: q = {} outside [0, 1]", e.q)));
            }
            if k > 0 {
                let prev = self.events[k - 1].t;
                let gap = e.t - prev;
                // a few ulps of slack so decimal schedules like 0.3, 1.3 pass
                let slack = 8.0 * f64::EPSILON * e.t.abs().max(self.min_gap);
                if !(gap > 0.0) {
                    out.push(Violation::new(
                        "impulse-order",
                        format!("event {k}: time {} does not follow {prev}", e.t),
                    ));
                } else if gap < self.min_gap - slack {
                    out.push(Violation::new(
                        "impulse-gap",
                        format!("event {k}: gap {gap} to the previous event is below T = {}", self.min_gap),
                    ));
                }
            }
        }
        out
    }
}

/// `S⁺ = (1 - p)S`, `I⁺ = (1 - q)I`.
#[inline]
pub fn apply_impulse(state: State, p: f64, q: f64) -> State {
    State { s: (1.0 - p) * state.s, i: (1.0 - q) * state.i }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rel: 1e-10, abs: 1e-12, max_steps: 2_000_000 }
    }
}

impl Tolerances {
    pub fn new(rel: f64, abs: f64) -> Self {
        Self { rel, abs, ..Self::default() }
    }

    pub fn halved(&self) -> Self {
        Self { rel: 0.5 * self.rel, abs: 0.5 * self.abs, max_steps: self.max_steps }
    }
}

/// A complete model instance.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Scenario {
    pub params: ModelParams,
    pub initial: State,
    #[cfg_attr(feature = "serde", serde(rename = "impulses", default))]
    pub schedule: ImpulseSchedule,
    pub horizon: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub tolerances: Tolerances,
    /// Extra times at which dense output is sampled.
    #[cfg_attr(feature = "serde", serde(default))]
    pub output_grid: Vec<f64>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub thresholds: Thresholds,
    /// Admits `γ < 0` somewhere on the horizon.
    #[cfg_attr(feature = "serde", serde(default))]
    pub allow_negative_gamma: bool,
    #[cfg_attr(feature = "serde", serde(default))]
    pub w_rule: WeightRule,
}

impl Scenario {
    pub fn new(params: ModelParams, initial: State, horizon: f64) -> Self {
        Self {
            params,
            initial,
            schedule: ImpulseSchedule::default(),
            horizon,
            tolerances: Tolerances::default(),
            output_grid: Vec::new(),
            thresholds: Thresholds::default(),
            allow_negative_gamma: false,
            w_rule: WeightRule::default(),
        }
    }

    pub fn with_schedule(mut self, schedule: ImpulseSchedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_tolerances(mut self, tolerances: Tolerances) -> Self {
        self.tolerances = tolerances;
        self
    }

    /// `n + 1` evenly spaced output times on `[0, horizon]`.
    pub fn with_uniform_grid(mut self, n: usize) -> Self {
        let n = n.max(1);
        self.output_grid = (0..=n).map(|k| self.horizon * k as f64 / n as f64).collect();
        self
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            out.push(Violation::new("horizon", format!("horizon must be positive and finite, got {}", self.horizon)));
            return out;
        }
        let x = self.initial;
        if !x.is_finite() || x.s < 0.0 || x.i < 0.0 {
            out.push(Violation::new(
                "initial-state",
                format!("initial state must be finite and nonnegative, got S = {}, I = {}", x.s, x.i),
            ));
        }
        let tol = self.tolerances;
        if !(tol.rel > 0.0 && tol.abs > 0.0) || !(tol.rel.is_finite() && tol.abs.is_finite()) {
            out.push(Violation::new(
                "tolerances",
                format!("tolerances must be positive, got rel = {}, abs = {}", tol.rel, tol.abs),
            ));
        }
        if let Some(t) = self.output_grid.iter().find(|t| !(**t >= 0.0 && **t <= self.horizon)) {
            out.push(Violation::new("output-grid", format!("output time {t} lies outside [0, {}]", self.horizon)));
        }
        out.extend(self.params.validate(self.horizon, self.allow_negative_gamma));
        out.extend(self.schedule.validate());
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SampleKind {
    Regular,
    /// Left limit at an impulse instant.
    Pre,
    /// Value just after the impulse map.
    Post,
}

impl SampleKind {
    pub fn label(self) -> &'static str {
        match self {
            SampleKind::Regular => "none",
            SampleKind::Pre => "pre",
            SampleKind::Post => "post",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub s: f64,
    pub i: f64,
    pub kind: SampleKind,
}

impl Sample {
    fn new(t: f64, x: State, kind: SampleKind) -> Self {
        Self { t, s: x.s, i: x.i, kind }
    }

    #[inline]
    pub fn n(&self) -> f64 {
        self.s + self.i
    }

    pub fn state(&self) -> State {
        State { s: self.s, i: self.i }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct ImpulseRecord {
    /// Position in the schedule.
    pub index: usize,
    pub t: f64,
    pub before: State,
    pub after: State,
    pub p: f64,
    pub q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    pub h_min: f64,
    pub h_max: f64,
    /// Sum of the embedded local error estimates (max norm) over accepted
    /// steps; a rough global error scale.
    pub error_estimate: f64,
}

impl Default for StepStats {
    fn default() -> Self {
        Self { accepted: 0, rejected: 0, rhs_evals: 0, h_min: f64::INFINITY, h_max: 0.0, error_estimate: 0.0 }
    }
}

/// Quartic continuous extension of one accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseStep {
    pub t0: f64,
    pub t1: f64,
    rcont: [V; 5],
}

impl DenseStep {
    pub fn eval(&self, t: f64) -> State {
        let h = self.t1 - self.t0;
        let s = if h > 0.0 { (t - self.t0) / h } else { 1.0 };
        let s1 = 1.0 - s;
        let r = &self.rcont;
        let c = |j: usize| r[0][j] + s * (r[1][j] + s1 * (r[2][j] + s * (r[3][j] + s1 * r[4][j])));
        State { s: c(0), i: c(1) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub impulses: Vec<ImpulseRecord>,
    pub stats: StepStats,
    pub initial: State,
    /// Requested end time.
    pub horizon: f64,
    /// Last time reached; equals `horizon` on success.
    pub end: f64,
    steps: Vec<DenseStep>,
}

impl Trajectory {
    fn start(initial: State, horizon: f64) -> Self {
        Self {
            samples: Vec::new(),
            impulses: Vec::new(),
            stats: StepStats::default(),
            initial,
            horizon,
            end: 0.0,
            steps: Vec::new(),
        }
    }

    pub fn dense_steps(&self) -> &[DenseStep] {
        &self.steps
    }

    pub fn final_state(&self) -> State {
        self.samples.last().map(Sample::state).unwrap_or(self.initial)
    }

    pub fn complete(&self) -> bool {
        self.end >= self.horizon
    }

    /// Dense-output state at `t`, taking the left limit at impulse instants.
    pub fn state_at(&self, t: f64) -> Option<State> {
        if !(t >= 0.0 && t <= self.end) {
            return None;
        }
        if t == 0.0 {
            return Some(self.initial);
        }
        let idx = self.steps.partition_point(|s| s.t1 < t);
        match self.steps.get(idx) {
            Some(step) => Some(step.eval(t)),
            // only zero-length horizons have no steps
            None => self.samples.last().map(Sample::state),
        }
    }

    /// Right limit at `t`: the post-impulse state when `t` is an impulse
    /// instant, [`Trajectory::state_at`] otherwise.
    pub fn state_after(&self, t: f64) -> Option<State> {
        match self.impulses.iter().rev().find(|r| r.t == t) {
            Some(r) => Some(r.after),
            None => self.state_at(t),
        }
    }

    /// Time and right-limit state from which closed forms restart when
    /// evaluated at `t`: the last impulse strictly before `t`, or the origin.
    pub fn restart_base(&self, t: f64) -> (f64, State) {
        let k = self.impulses.partition_point(|r| r.t < t);
        if k == 0 {
            (0.0, self.initial)
        } else {
            let r = &self.impulses[k - 1];
            (r.t, r.after)
        }
    }

    /// Step boundaries in `(t0, t1)`; the dense output is smooth between them.
    pub fn step_breaks(&self, t0: f64, t1: f64) -> Vec<f64> {
        let first = self.steps.partition_point(|s| s.t1 <= t0);
        self.steps[first..].iter().map(|s| s.t1).take_while(|&t| t < t1).collect()
    }

    pub fn min_components(&self) -> (f64, f64) {
        self.samples.iter().fold((f64::INFINITY, f64::INFINITY), |(s, i), x| (s.min(x.s), i.min(x.i)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FailureKind {
    Invalid(Vec<Violation>),
    StepSizeUnderflow { t: f64, h: f64 },
    StepLimit { t: f64, steps: usize },
    NonFinite { t: f64 },
    Model(ModelError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationError {
    pub kind: FailureKind,
    /// Everything integrated up to the failure.
    pub partial: Option<Box<Trajectory>>,
}

impl IntegrationError {
    pub fn last_valid_time(&self) -> Option<f64> {
        self.partial.as_ref().map(|t| t.end)
    }
}

impl fmt::Display for IntegrationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            FailureKind::Invalid(v) => {
                write!(f, "invalid scenario:")?;
                for x in v {
                    write!(f, " {x};")?;
                }
                Ok(())
            }
            FailureKind::StepSizeUnderflow { t, h } => {
                write!(f, "step size underflow (h = {h:e}) at t = {t}; the problem may be stiff")
            }
            FailureKind::StepLimit { t, steps } => write!(f, "step limit {steps} reached at t = {t}"),
            FailureKind::NonFinite { t } => write!(f, "state became non-finite after t = {t}"),
            FailureKind::Model(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for IntegrationError {}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFE: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;

#[inline]
fn axpy(y: V, h: f64, terms: &[(f64, &V)]) -> V {
    let mut out = y;
    for j in 0..2 {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[j];
        }
        out[j] += h * acc;
    }
    out
}

#[inline]
fn sq(x: f64) -> f64 {
    x * x
}

struct Segment<'a> {
    params: &'a ModelParams,
    end: f64,
}

impl Segment<'_> {
    fn rhs(&self, t: f64, y: V, evals: &mut usize) -> Result<V, ModelError> {
        *evals += 1;
        let side = if t >= self.end { Side::Left } else { Side::Right };
        let (ds, di) = self.params.vector_field_on(t, State { s: y[0], i: y[1] }, side)?;
        Ok([ds, di])
    }
}

fn hinit(
    seg: &Segment<'_>,
    t: f64,
    y: V,
    f0: V,
    hmax: f64,
    tol: &Tolerances,
    evals: &mut usize,
) -> Result<f64, ModelError> {
    let sk = |j: usize| tol.abs + tol.rel * y[j].abs();
    let dnf: f64 = (0..2).map(|j| sq(f0[j] / sk(j))).sum();
    let dny: f64 = (0..2).map(|j| sq(y[j] / sk(j))).sum();
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { libm::sqrt(dny / dnf) * 0.01 };
    h = h.min(hmax);
    let y1 = axpy(y, h, &[(1.0, &f0)]);
    let f1 = seg.rhs(t + h, y1, evals)?;
    let der2 = libm::sqrt((0..2).map(|j| sq((f1[j] - f0[j]) / sk(j))).sum::<f64>()) / h;
    let der12 = der2.abs().max(libm::sqrt(dnf));
    let h1 = if der12 <= 1e-15 { (h * 1e-3).max(1e-6) } else { libm::pow(0.01 / der12, 0.2) };
    Ok((100.0 * h).min(h1).min(hmax))
}

struct Run<'a> {
    tol: Tolerances,
    grid: &'a [f64],
    grid_pos: usize,
    traj: Trajectory,
}

impl Run<'_> {
    /// Pushes grid samples strictly inside `(t0, t1)` using `step`.
    fn emit_grid(&mut self, step: &DenseStep) {
        while self.grid_pos < self.grid.len() && self.grid[self.grid_pos] <= step.t0 {
            self.grid_pos += 1;
        }
        while self.grid_pos < self.grid.len() && self.grid[self.grid_pos] < step.t1 {
            let t = self.grid[self.grid_pos];
            self.traj.samples.push(Sample::new(t, step.eval(t), SampleKind::Regular));
            self.grid_pos += 1;
        }
    }

    /// Integrates `[a, b]` from `y`; returns the state at `b` (left limit).
    /// Interior step ends are pushed as regular samples; `b` itself is not.
    fn segment(&mut self, params: &ModelParams, a: f64, b: f64, y0: State) -> Result<State, FailureKind> {
        let seg = Segment { params, end: b };
        let tol = self.tol;
        let mut evals = 0usize;
        let mut t = a;
        let mut y: V = [y0.s, y0.i];
        let result = (|| {
            let mut k1 = seg.rhs(t, y, &mut evals).map_err(FailureKind::Model)?;
            let hmax = b - a;
            let mut h = hinit(&seg, t, y, k1, hmax, &tol, &mut evals).map_err(FailureKind::Model)?;
            let mut facold: f64 = 1e-4;
            let mut rejected_last = false;
            loop {
                let stats = &self.traj.stats;
                if stats.accepted + stats.rejected >= tol.max_steps {
                    return Err(FailureKind::StepLimit { t, steps: tol.max_steps });
                }
                let mut last = false;
                if t + 1.01 * h >= b {
                    h = b - t;
                    last = true;
                }
                if !last && h <= 16.0 * f64::EPSILON * t.abs().max(1e-300) {
                    return Err(FailureKind::StepSizeUnderflow { t, h });
                }
                let t_new = if last { b } else { t + h };

                let k2 = seg.rhs(t + C2 * h, axpy(y, h, &[(A21, &k1)]), &mut evals).map_err(FailureKind::Model)?;
                let k3 = seg
                    .rhs(t + C3 * h, axpy(y, h, &[(A31, &k1), (A32, &k2)]), &mut evals)
                    .map_err(FailureKind::Model)?;
                let k4 = seg
                    .rhs(t + C4 * h, axpy(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]), &mut evals)
                    .map_err(FailureKind::Model)?;
                let k5 = seg
                    .rhs(t + C5 * h, axpy(y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]), &mut evals)
                    .map_err(FailureKind::Model)?;
                let k6 = seg
                    .rhs(t_new, axpy(y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]), &mut evals)
                    .map_err(FailureKind::Model)?;
                let y_new = axpy(y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
                let k7 = seg.rhs(t_new, y_new, &mut evals).map_err(FailureKind::Model)?;

                let e = axpy([0.0; 2], h, &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)]);
                let mut err = 0.0;
                for j in 0..2 {
                    let sc = tol.abs + tol.rel * y[j].abs().max(y_new[j].abs());
                    err += sq(e[j] / sc);
                }
                let mut err = libm::sqrt(0.5 * err);
                if !err.is_finite() || !(y_new[0].is_finite() && y_new[1].is_finite()) {
                    err = f64::INFINITY;
                }

                let fac11 = libm::pow(err, 0.2 - BETA * 0.75);
                if err <= 1.0 {
                    let r2 = [y_new[0] - y[0], y_new[1] - y[1]];
                    let r3 = [h * k1[0] - r2[0], h * k1[1] - r2[1]];
                    let r4 = [r2[0] - h * k7[0] - r3[0], r2[1] - h * k7[1] - r3[1]];
                    let r5 = axpy([0.0; 2], h, &[(D1, &k1), (D3, &k3), (D4, &k4), (D5, &k5), (D6, &k6), (D7, &k7)]);
                    let step = DenseStep { t0: t, t1: t_new, rcont: [y, r2, r3, r4, r5] };
                    self.emit_grid(&step);
                    self.traj.steps.push(step);
                    let stats = &mut self.traj.stats;
                    stats.accepted += 1;
                    stats.h_min = stats.h_min.min(h);
                    stats.h_max = stats.h_max.max(h);
                    stats.error_estimate += e[0].abs().max(e[1].abs());
                    k1 = k7;
                    y = y_new;
                    t = t_new;
                    self.traj.end = t;
                    if last {
                        return Ok(());
                    }
                    self.traj.samples.push(Sample::new(t, State { s: y[0], i: y[1] }, SampleKind::Regular));
                    let fac = (fac11 / libm::pow(facold, BETA) / SAFE).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                    facold = err.max(1e-4);
                    let mut h_new = h / fac;
                    if rejected_last {
                        h_new = h_new.min(h);
                    }
                    rejected_last = false;
                    h = h_new.min(hmax);
                } else {
                    self.traj.stats.rejected += 1;
                    rejected_last = true;
                    h /= (fac11 / SAFE).min(1.0 / FAC_MIN);
                    if !h.is_finite() || h <= 0.0 {
                        return Err(FailureKind::NonFinite { t });
                    }
                }
            }
        })();
        self.traj.stats.rhs_evals += evals;
        result.map(|_| State { s: y[0], i: y[1] })
    }
}

/// Integrates the scenario over `[0, horizon]`.
///
/// Samples are recorded at every accepted step, at every requested output
/// time and on both sides of each impulse. On failure the error carries the
/// trajectory up to the last accepted step.
pub fn integrate(scenario: &Scenario) -> Result<Trajectory, IntegrationError> {
    let violations = scenario.validate();
    if !violations.is_empty() {
        return Err(IntegrationError { kind: FailureKind::Invalid(violations), partial: None });
    }
    let horizon = scenario.horizon;
    let params = &scenario.params;

    let mut grid: Vec<f64> = scenario.output_grid.clone();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    // mesh points with the schedule index of the impulse there, if any
    let events: Vec<(usize, ImpulseEvent)> = scenario.schedule.within(horizon).map(|(k, e)| (k, *e)).collect();
    let mut mesh: Vec<(f64, Option<usize>)> = params.breakpoints(0.0, horizon).into_iter().map(|t| (t, None)).collect();
    mesh.extend(events.iter().filter(|(_, e)| e.t > 0.0).map(|(k, e)| (e.t, Some(*k))));
    mesh.push((horizon, None));
    mesh.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.is_some().cmp(&a.1.is_some())));
    mesh.dedup_by(|later, earlier| later.0 == earlier.0);

    let mut run =
        Run { tol: scenario.tolerances, grid: &grid, grid_pos: 0, traj: Trajectory::start(scenario.initial, horizon) };
    let impulse = |run: &mut Run<'_>, k: usize, t: f64, x: State| -> State {
        let e = scenario.schedule.events[k];
        let after = apply_impulse(x, e.p, e.q);
        run.traj.samples.push(Sample::new(t, x, SampleKind::Pre));
        run.traj.samples.push(Sample::new(t, after, SampleKind::Post));
        run.traj.impulses.push(ImpulseRecord { index: k, t, before: x, after, p: e.p, q: e.q });
        after
    };

    let mut x = scenario.initial;
    match events.first() {
        Some((k, e)) if e.t == 0.0 => x = impulse(&mut run, *k, 0.0, x),
        _ => run.traj.samples.push(Sample::new(0.0, x, SampleKind::Regular)),
    }

    let mut a = 0.0;
    for (b, event) in mesh {
        if b <= a {
            continue;
        }
        match run.segment(params, a, b, x) {
            Ok(end) => x = end,
            Err(kind) => {
                let partial = Some(Box::new(run.traj));
                return Err(IntegrationError { kind, partial });
            }
        }
        match event {
            Some(k) => x = impulse(&mut run, k, b, x),
            None => run.traj.samples.push(Sample::new(b, x, SampleKind::Regular)),
        }
        a = b;
    }
    run.traj.end = horizon;
    Ok(run.traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timefn::TimeFn;
    use alloc::vec;

    fn logistic_only() -> ModelParams {
        ModelParams::constant(1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 100.0)
    }

    #[test]
    fn schedule_with_unit_gaps_is_ok() {
        let s = ImpulseSchedule::new(1.0, vec![ImpulseEvent::new(1.0, 0.2, 0.3), ImpulseEvent::new(2.0, 0.2, 0.3)]);
        assert!(s.validate().is_empty());
    }

    #[test]
    fn short_gap_flags_second_event() {
        let s = ImpulseSchedule::new(1.0, vec![ImpulseEvent::new(1.0, 0.2, 0.3), ImpulseEvent::new(1.5, 0.2, 0.3)]);
        let v = s.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].code, "impulse-gap");
        assert!(v[0].message.starts_with("event 1"));
    }

    #[test]
    fn fraction_above_one_is_rejected() {
        let s = ImpulseSchedule::new(1.0, vec![ImpulseEvent::new(1.0, 1.2, 0.0)]);
        assert_eq!(s.validate()[0].code, "impulse-fraction");
    }

    #[test]
    fn impulse_map_arithmetic() {
        assert_eq!(apply_impulse(State::new(100.0, 40.0), 0.2, 0.5), State::new(80.0, 20.0));
        assert_eq!(apply_impulse(State::new(3.0, 4.0), 0.0, 0.0), State::new(3.0, 4.0));
        assert_eq!(apply_impulse(State::new(3.0, 4.0), 1.0, 1.0), State::ZERO);
    }

    #[test]
    fn logistic_matches_closed_form() {
        let sc = Scenario::new(logistic_only(), State::new(10.0, 0.0), 8.0);
        let tr = integrate(&sc).unwrap();
        for t in [0.5, 1.0, 3.0, 8.0] {
            let exact = 100.0 / (1.0 + 9.0 * libm::exp(-t));
            let got = tr.state_at(t).unwrap().s;
            assert!((got - exact).abs() < 1e-8 * exact, "t={t} got {got} exact {exact}");
        }
    }

    #[test]
    fn infected_decay_is_exponential() {
        let mut p = ModelParams::constant(0.0, 0.6, 0.4, 0.0, 1.0, 1.0, 100.0);
        p.r = TimeFn::constant(0.0);
        let sc = Scenario::new(p, State::new(5.0, 1.0), 5.0);
        let tr = integrate(&sc).unwrap();
        for t in [1.0, 2.0, 5.0] {
            assert!((tr.state_at(t).unwrap().i - libm::exp(-t)).abs() < 1e-8);
        }
    }

    #[test]
    fn impulse_pair_and_exact_zero_after_full_cull() {
        let p = ModelParams::constant(1.0, 0.5, 0.5, 0.1, 1.0, 1.0, 100.0);
        let sc = Scenario::new(p, State::new(20.0, 5.0), 3.0)
            .with_schedule(ImpulseSchedule::new(1.0, vec![ImpulseEvent::new(1.0, 0.0, 1.0)]));
        let tr = integrate(&sc).unwrap();
        let pre = tr.samples.iter().position(|s| s.kind == SampleKind::Pre).unwrap();
        assert_eq!(tr.samples[pre + 1].kind, SampleKind::Post);
        assert_eq!(tr.samples[pre].t, tr.samples[pre + 1].t);
        assert_eq!(tr.samples[pre].s, tr.samples[pre + 1].s);
        assert!(tr.samples[pre + 1..].iter().all(|s| s.i == 0.0));
        assert_eq!(tr.restart_base(2.0), (1.0, tr.impulses[0].after));
        assert_eq!(tr.state_at(1.0).unwrap().i, tr.impulses[0].before.i);
    }

    #[test]
    fn grid_points_are_sampled() {
        let sc = Scenario::new(logistic_only(), State::new(10.0, 0.0), 4.0).with_uniform_grid(8);
        let tr = integrate(&sc).unwrap();
        for k in 0..=8 {
            let t = 0.5 * k as f64;
            assert!(tr.samples.iter().any(|s| s.t == t), "missing grid time {t}");
        }
        assert!(tr.samples.windows(2).all(|w| w[0].t < w[1].t));
    }

    #[test]
    fn breakpoints_are_mesh_points() {
        let mut p = logistic_only();
        p.r = TimeFn::piecewise_constant(vec![1.234], vec![1.0, -1.0]);
        let tr = integrate(&Scenario::new(p, State::new(10.0, 0.0), 3.0)).unwrap();
        assert!(tr.dense_steps().iter().any(|s| s.t1 == 1.234));
        let s1 = 100.0 / (1.0 + 9.0 * libm::exp(-1.234));
        let exact = 100.0 / (1.0 - (1.0 - 100.0 / s1) * libm::exp(1.766));
        assert!((tr.final_state().s - exact).abs() < 1e-8 * exact);
    }

    #[test]
    fn invalid_scenario_is_refused() {
        let mut p = logistic_only();
        p.beta = TimeFn::constant(-1.0);
        let err = integrate(&Scenario::new(p, State::new(1.0, 1.0), 1.0)).unwrap_err();
        assert!(matches!(err.kind, FailureKind::Invalid(_)));
    }

    #[test]
    fn step_limit_returns_partial_trajectory() {
        let sc = Scenario::new(logistic_only(), State::new(10.0, 0.0), 50.0).with_tolerances(Tolerances {
            rel: 1e-12,
            abs: 1e-14,
            max_steps: 20,
        });
        let err = integrate(&sc).unwrap_err();
        assert!(matches!(err.kind, FailureKind::StepLimit { .. }));
        let partial = err.partial.unwrap();
        assert!(partial.end > 0.0 && partial.end < 50.0);
    }
}
