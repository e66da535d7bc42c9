//! Constant-coefficient limiting system: equilibria, Jacobians and stability
//! labels, plus two infection-free checks on the time-varying coefficients
//! (periodic capacity and the sign trend of `∫ r(1 - δ₁)`).

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::model::{Coefficients, ModelParams, State};
use crate::quadrature;
use crate::settings::Thresholds;
use crate::timefn::TimeFn;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

pub type Matrix2 = [[f64; 2]; 2];

/// Constant limits of the coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct LimitingParams {
    pub r_star: f64,
    pub d_star: f64,
    pub gamma_star: f64,
    pub beta_star: f64,
    pub delta1_star: f64,
    pub delta2_star: f64,
    pub p_star: f64,
}

impl LimitingParams {
    pub fn new(r: f64, d: f64, gamma: f64, beta: f64, delta1: f64, delta2: f64, p: f64) -> Self {
        Self {
            r_star: r,
            d_star: d,
            gamma_star: gamma,
            beta_star: beta,
            delta1_star: delta1,
            delta2_star: delta2,
            p_star: p,
        }
    }

    pub fn coefficients(&self) -> Coefficients {
        Coefficients {
            r: self.r_star,
            d: self.d_star,
            gamma: self.gamma_star,
            beta: self.beta_star,
            delta1: self.delta1_star,
            delta2: self.delta2_star,
            p: self.p_star,
        }
    }

    /// Limiting vector field.
    pub fn field(&self, x: State) -> (f64, f64) {
        self.coefficients().field(x)
    }

    /// Constant-coefficient model with these limits.
    pub fn to_params(&self, eps0: f64) -> ModelParams {
        let mut p = ModelParams::constant(
            self.r_star,
            self.d_star,
            self.gamma_star,
            self.beta_star,
            self.delta1_star,
            self.delta2_star,
            self.p_star,
        );
        p.eps0 = eps0;
        p
    }
}

/// Tail behaviour of one coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct CoefficientLimit {
    pub name: &'static str,
    /// Tail mean, or `None` when the tail oscillation exceeds the tolerance.
    pub limit: Option<f64>,
    /// `max - min` over the window.
    pub oscillation: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct LimitReport {
    pub window: (f64, f64),
    pub entries: Vec<CoefficientLimit>,
    /// Present only when every coefficient converged.
    pub params: Option<LimitingParams>,
}

/// Limits of each coefficient over the tail window `[t0, t1]`: the window
/// mean if the enclosure width is at most `limit_tol`.
pub fn limiting_params(params: &ModelParams, t0: f64, t1: f64, th: &Thresholds) -> LimitReport {
    let cap = params.capacity_fn();
    let fns: [(&'static str, &TimeFn); 7] = [
        ("r", &params.r),
        ("d", &params.d),
        ("gamma", &params.gamma),
        ("beta", &params.beta),
        ("delta1", &params.delta1),
        ("delta2", &params.delta2),
        ("p", &cap),
    ];
    let entries: Vec<CoefficientLimit> = fns
        .iter()
        .map(|(name, f)| {
            let b = f.bounds_over(t0, t1);
            let oscillation = b.width();
            let limit = (oscillation <= th.limit_tol).then(|| {
                if oscillation == 0.0 {
                    b.lower
                } else if t1 > t0 {
                    f.integrate(t0, t1, th.quad_tol).map(|v| v / (t1 - t0)).unwrap_or(0.5 * (b.lower + b.upper))
                } else {
                    f.value(t0)
                }
            });
            CoefficientLimit { name, limit, oscillation }
        })
        .collect();
    let vals: Option<Vec<f64>> = entries.iter().map(|e| e.limit).collect();
    let params = vals.map(|v| LimitingParams::new(v[0], v[1], v[2], v[3], v[4], v[5], v[6]));
    LimitReport { window: (t0, t1), entries, params }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum EquilibriumKind {
    Zero,
    Endemic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Stability {
    LocallyAsymptoticallyStable,
    LocallyStableNotAsymptotic,
    Unstable,
    CriticalDegenerate,
    Inconclusive,
}

impl Stability {
    pub fn label(self) -> &'static str {
        match self {
            Stability::LocallyAsymptoticallyStable => "locally_asymptotically_stable",
            Stability::LocallyStableNotAsymptotic => "locally_stable_not_asymptotic",
            Stability::Unstable => "unstable",
            Stability::CriticalDegenerate => "critical_degenerate",
            Stability::Inconclusive => "inconclusive",
        }
    }
}

impl fmt::Display for Stability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

/// Other closed forms for the endemic infected level, evaluated for
/// comparison with the one derived from the vector field.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct EndemicForms {
    /// `r S (p - δ₁S) / (d p + r δ₂ S)`, used as the Newton seed.
    pub derived: f64,
    /// `γ(p - G)(d + γ) / (d β p)` with `G` at the derived point.
    pub incidence_form: f64,
    /// `γ(p - δ₁S)(d + γ) / (d β p + r δ₂)`.
    pub rational_form: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Equilibrium {
    pub kind: EquilibriumKind,
    pub point: State,
    pub jacobian: Matrix2,
    pub classification: Stability,
    pub eigenvalues: [Eigenvalue; 2],
    /// Both coordinates strictly positive (always true for the origin).
    pub admissible: bool,
    /// `‖F(point)‖∞` of the limiting field.
    pub residual: f64,
    pub newton_iterations: usize,
    pub forms: Option<EndemicForms>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnalysisError {
    /// Newton iteration failed; carries the closed-form seed.
    NewtonDiverged { unpolished: State, residual: f64 },
    /// Probe window longer than the horizon.
    Domain { period: f64, horizon: f64 },
}

impl fmt::Display for AnalysisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalysisError::NewtonDiverged { unpolished, residual } => write!(
                f,
                "Newton polish did not converge from (S, I) = ({}, {}) (residual {residual:e})",
                unpolished.s, unpolished.i
            ),
            AnalysisError::Domain { period, horizon } => {
                write!(f, "period {period} exceeds the horizon {horizon}")
            }
        }
    }
}

impl core::error::Error for AnalysisError {}

/// Analytic Jacobian of the limiting field at `x`.
pub fn jacobian(lim: &LimitingParams, x: State) -> Matrix2 {
    let LimitingParams {
        r_star: r,
        d_star: d,
        gamma_star: g,
        beta_star: b,
        delta1_star: d1,
        delta2_star: d2,
        p_star: p,
    } = *lim;
    [[r * (1.0 - (2.0 * d1 * x.s + d2 * x.i) / p) - b * x.i, g - (b + r * d2 / p) * x.s], [b * x.i, b * x.s - d - g]]
}

pub fn trace(m: &Matrix2) -> f64 {
    m[0][0] + m[1][1]
}

pub fn det(m: &Matrix2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// Eigenvalues of a real 2×2 matrix by the quadratic formula, avoiding
/// cancellation in the smaller root.
pub fn eigenvalues(m: &Matrix2) -> [Eigenvalue; 2] {
    let half_tr = 0.5 * trace(m);
    let dt = det(m);
    let disc = half_tr * half_tr - dt;
    if disc >= 0.0 {
        let root = libm::sqrt(disc);
        let l1 = if half_tr >= 0.0 { half_tr + root } else { half_tr - root };
        let l2 = if l1 != 0.0 { dt / l1 } else { 0.0 };
        let (hi, lo) = if l1 >= l2 { (l1, l2) } else { (l2, l1) };
        [Eigenvalue { re: hi, im: 0.0 }, Eigenvalue { re: lo, im: 0.0 }]
    } else {
        let im = libm::sqrt(-disc);
        [Eigenvalue { re: half_tr, im }, Eigenvalue { re: half_tr, im: -im }]
    }
}

pub fn max_real_part(ev: &[Eigenvalue; 2]) -> f64 {
    ev[0].re.max(ev[1].re)
}

/// Stability label for the origin from `r*` and `d* + γ*`, equalities
/// decided within `tol`.
pub fn classify_zero(lim: &LimitingParams, tol: f64) -> Stability {
    let r = lim.r_star;
    let dg = lim.d_star + lim.gamma_star;
    let zero = |x: f64| x.abs() <= tol;
    if zero(r) && zero(lim.d_star) && zero(lim.gamma_star) {
        Stability::CriticalDegenerate
    } else if r < -tol && dg > tol {
        Stability::LocallyAsymptoticallyStable
    } else if zero(r) && dg > tol {
        Stability::LocallyStableNotAsymptotic
    } else if r > tol || dg < -tol {
        Stability::Unstable
    } else {
        Stability::Inconclusive
    }
}

/// Trace/determinant label for an interior equilibrium.
pub fn classify_matrix(m: &Matrix2, tol: f64) -> Stability {
    let tr = trace(m);
    let dt = det(m);
    if dt < -tol || tr > tol {
        Stability::Unstable
    } else if tr < -tol && dt > tol {
        Stability::LocallyAsymptoticallyStable
    } else if tr < -tol && dt.abs() <= tol {
        Stability::LocallyStableNotAsymptotic
    } else {
        Stability::Inconclusive
    }
}

/// Label for either equilibrium kind.
pub fn classify(kind: EquilibriumKind, lim: &LimitingParams, jac: &Matrix2, tol: f64) -> Stability {
    match kind {
        EquilibriumKind::Zero => classify_zero(lim, tol),
        EquilibriumKind::Endemic => classify_matrix(jac, tol),
    }
}

fn residual(lim: &LimitingParams, x: State) -> f64 {
    let (a, b) = lim.field(x);
    a.abs().max(b.abs())
}

/// Newton iteration on the limiting field. Returns the best iterate, its
/// residual and the iteration count.
pub fn newton(lim: &LimitingParams, x0: State, tol: f64, max_iter: usize) -> (State, f64, usize) {
    let mut x = x0;
    let mut res = residual(lim, x);
    let mut best = (x, res);
    let mut it = 0;
    while it < max_iter && res > tol {
        let j = jacobian(lim, x);
        let dt = det(&j);
        if dt == 0.0 || !dt.is_finite() {
            break;
        }
        let (f1, f2) = lim.field(x);
        let ds = (j[1][1] * f1 - j[0][1] * f2) / dt;
        let di = (j[0][0] * f2 - j[1][0] * f1) / dt;
        x = State { s: x.s - ds, i: x.i - di };
        it += 1;
        res = residual(lim, x);
        if !res.is_finite() {
            break;
        }
        if res < best.1 {
            best = (x, res);
        }
        if ds.abs() <= f64::EPSILON * x.s.abs() && di.abs() <= f64::EPSILON * x.i.abs() {
            break;
        }
    }
    (best.0, best.1, it)
}

/// Closed-form endemic point `(S₂, I₂)`, or `None` without one.
pub fn endemic_closed_form(lim: &LimitingParams) -> Option<State> {
    if lim.beta_star == 0.0 {
        return None;
    }
    let s = (lim.d_star + lim.gamma_star) / lim.beta_star;
    let den = lim.d_star * lim.p_star + lim.r_star * lim.delta2_star * s;
    if den == 0.0 {
        return None;
    }
    let i = lim.r_star * s * (lim.p_star - lim.delta1_star * s) / den;
    Some(State { s, i })
}

fn endemic_forms(lim: &LimitingParams, x: State) -> EndemicForms {
    let LimitingParams {
        r_star: r,
        d_star: d,
        gamma_star: g,
        beta_star: b,
        delta1_star: d1,
        delta2_star: d2,
        p_star: p,
    } = *lim;
    let big_g = d1 * x.s + d2 * x.i;
    EndemicForms {
        derived: x.i,
        incidence_form: g * (p - big_g) * (d + g) / (d * b * p),
        rational_form: g * (p - d1 * x.s) * (d + g) / (d * b * p + r * d2),
    }
}

fn build(lim: &LimitingParams, kind: EquilibriumKind, point: State, iters: usize, tol: f64) -> Equilibrium {
    let jac = jacobian(lim, point);
    let eigenvalues = eigenvalues(&jac);
    let classification = classify(kind, lim, &jac, tol);
    let admissible = match kind {
        EquilibriumKind::Zero => true,
        EquilibriumKind::Endemic => point.s > 0.0 && point.i > 0.0,
    };
    Equilibrium {
        kind,
        point,
        jacobian: jac,
        classification,
        eigenvalues,
        admissible,
        residual: residual(lim, point),
        newton_iterations: iters,
        forms: None,
    }
}

/// Tolerance on the polished residual: `1e-12` absolute, widened in
/// proportion to the magnitudes of the field's terms.
pub fn residual_tolerance(lim: &LimitingParams, x: State) -> f64 {
    let c = lim.coefficients();
    let scale = (c.r.abs() + c.gamma.abs() + c.d.abs() + c.beta.abs() * x.s.abs()) * (x.s.abs() + x.i.abs());
    1e-12_f64.max(64.0 * f64::EPSILON * scale)
}

/// The origin, always, and the endemic point when `β* > 0`.
///
/// The endemic point starts from its closed form and is polished by
/// Newton's method on the limiting field.
pub fn equilibria(lim: &LimitingParams, th: &Thresholds) -> Result<Vec<Equilibrium>, AnalysisError> {
    let mut out = vec![build(lim, EquilibriumKind::Zero, State::ZERO, 0, th.class_tol)];
    let Some(seed) = endemic_closed_form(lim) else {
        return Ok(out);
    };
    let tol = residual_tolerance(lim, seed);
    let (x, res, iters) = newton(lim, seed, 0.25 * tol, 50);
    if !(res <= tol) {
        return Err(AnalysisError::NewtonDiverged { unpolished: seed, residual: res });
    }
    let mut e = build(lim, EquilibriumKind::Endemic, x, iters, th.class_tol);
    e.forms = Some(endemic_forms(lim, seed));
    out.push(e);
    Ok(out)
}

/// Outcome of probing `∫_t^{t+Tp} r(1 - δ₁)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PeriodicityVerdict {
    pub periodic: bool,
    /// Residual of largest magnitude (signed).
    pub max_residual: f64,
    pub probes: Vec<(f64, f64)>,
}

/// Probes the one-period integral of `r(1 - δ₁)` at `n_probes` start times
/// spread over `[0, horizon - Tp]`.
pub fn verify_periodic_capacity(
    params: &ModelParams,
    tp: f64,
    horizon: f64,
    n_probes: usize,
    quad_tol: f64,
) -> Result<PeriodicityVerdict, AnalysisError> {
    if !(tp > 0.0) || tp > horizon {
        return Err(AnalysisError::Domain { period: tp, horizon });
    }
    let n = n_probes.max(1);
    let span = horizon - tp;
    let mut probes = Vec::with_capacity(n);
    let mut max_residual: f64 = 0.0;
    for j in 0..n {
        let t = if n == 1 { 0.0 } else { span * j as f64 / (n - 1) as f64 };
        let v = infection_free_rate_integral(params, t, t + tp, quad_tol);
        if v.abs() > max_residual.abs() || v.is_nan() {
            max_residual = v;
        }
        probes.push((t, v));
    }
    Ok(PeriodicityVerdict { periodic: max_residual.abs() <= 10.0 * quad_tol, max_residual, probes })
}

/// Infection-free parameters with `δ₁ = 1 + a·sin(2πt/Tp)` and a carrying
/// capacity `p(t) = p(0)·exp(-c(1 - cos(2πt/Tp)))`, `c = r·a·Tp/(2π)`, for
/// which `N ≡ p` solves the logistic equation. Starting at `S(0) = p(0)`
/// gives a `Tp`-periodic total population.
pub fn periodic_capacity_params(r: f64, a: f64, tp: f64, p_start: f64) -> ModelParams {
    let c = r * a * tp / core::f64::consts::TAU;
    let mut params = ModelParams::constant(r, 0.0, 0.0, 0.0, 1.0, 0.0, p_start);
    params.delta1 = TimeFn::sum(vec![TimeFn::constant(1.0), TimeFn::sinusoid(0.0, a, tp, 0.0)]);
    params.k = TimeFn::exp(p_start, TimeFn::sinusoid(-c, c, tp, core::f64::consts::FRAC_PI_2));
    params
}

/// `∫_{t0}^{t1} r(τ)(1 - δ₁(τ)) dτ`; NaN if the quadrature fails.
pub fn infection_free_rate_integral(params: &ModelParams, t0: f64, t1: f64, tol: f64) -> f64 {
    let mut breaks = params.r.breakpoints(t0, t1);
    breaks.extend(params.delta1.breakpoints(t0, t1));
    breaks.sort_by(f64::total_cmp);
    let f = |t: f64| params.r.value(t) * (1.0 - params.delta1.value(t));
    quadrature::integrate(f, t0, t1, &breaks, tol).map(|q| q.value).unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum InfectionFreeLabel {
    AsymptoticallyStable,
    Stable,
    Unstable,
    Inconclusive,
}

/// Finite-horizon evidence for the infection-free trend.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct InfectionFreeReport {
    pub label: InfectionFreeLabel,
    /// Least-squares slope of `Φ` over the tail window.
    pub tail_slope: f64,
    pub phi_max: f64,
    pub phi_final: f64,
    /// `(t, Φ(t))` with `Φ(t) = ∫₀ᵗ r(1 - δ₁)`.
    pub curve: Vec<(f64, f64)>,
}

/// Least-squares slope through `(x, y)` pairs.
pub fn regression_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    if points.len() < 2 {
        return 0.0;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(x, y) in points {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Labels the trend of `Φ(t) = ∫₀ᵗ r(1 - δ₁)` on `[0, horizon]`: drift to
/// `-∞` (asymptotically stable), to `+∞` (unstable), or flat and bounded
/// (stable).
pub fn classify_infection_free(params: &ModelParams, horizon: f64, th: &Thresholds) -> InfectionFreeReport {
    let n = 800usize;
    let mut curve = Vec::with_capacity(n + 1);
    curve.push((0.0, 0.0));
    let mut phi = 0.0;
    for k in 1..=n {
        let t0 = horizon * (k - 1) as f64 / n as f64;
        let t1 = horizon * k as f64 / n as f64;
        phi += infection_free_rate_integral(params, t0, t1, th.quad_tol / n as f64);
        curve.push((t1, phi));
    }
    let phi_max = curve.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let tail_start = horizon * (1.0 - th.tail_fraction);
    let split = curve.partition_point(|p| p.0 < tail_start);
    let tail = &curve[split..];
    let slope = regression_slope(tail);
    let head_max = curve[..split.max(1)].iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let tail_max = tail.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let label = if !phi.is_finite() || !slope.is_finite() {
        InfectionFreeLabel::Inconclusive
    } else if slope < -th.slope_tol {
        InfectionFreeLabel::AsymptoticallyStable
    } else if slope > th.slope_tol {
        InfectionFreeLabel::Unstable
    } else if tail_max <= head_max + th.slope_tol * (horizon - tail_start) {
        InfectionFreeLabel::Stable
    } else {
        InfectionFreeLabel::Inconclusive
    };
    InfectionFreeReport { label, tail_slope: slope, phi_max, phi_final: phi, curve }
}
