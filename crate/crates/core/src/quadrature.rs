//! Adaptive Gauss–Kronrod (10/21-point) quadrature with caller-supplied
//! breakpoints.
//!
//! Breakpoints become initial panel boundaries so that jump discontinuities
//! of piecewise coefficients never fall inside a panel. Kronrod nodes are all
//! interior, so the integrand is never evaluated exactly on a breakpoint.

use alloc::vec::Vec;
use core::fmt;

/// Default absolute tolerance for coefficient integrals.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Default panel budget before giving up.
pub const DEFAULT_MAX_PANELS: usize = 20_000;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_715_112_965_870,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss 10-point weights for XGK[1], XGK[3], ..., XGK[9].
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuadError {
    /// The panel budget ran out before the error estimate dropped below the
    /// tolerance.
    NotConverged { value: f64, abs_error: f64 },
    /// Bounds were not ordered or not finite.
    BadInterval { a: f64, b: f64 },
    /// The integrand produced a NaN or infinity.
    NonFinite { at: f64 },
}

impl fmt::Display for QuadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuadError::NotConverged { value, abs_error } => {
                write!(f, "quadrature did not converge (value {value}, estimated error {abs_error})")
            }
            QuadError::BadInterval { a, b } => write!(f, "invalid integration interval [{a}, {b}]"),
            QuadError::NonFinite { at } => write!(f, "integrand is not finite at t = {at}"),
        }
    }
}

impl core::error::Error for QuadError {}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    floor: f64,
}

/// One 21-point Kronrod evaluation with the embedded 10-point Gauss rule.
/// Returns `(kronrod, error_estimate, roundoff_floor)`.
fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64, f64), QuadError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    if !fc.is_finite() {
        return Err(QuadError::NonFinite { at: center });
    }
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    let mut abs_sum = fc.abs() * WGK[10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let (x1, x2) = (center - dx, center + dx);
        let (f1, f2) = (f(x1), f(x2));
        if !f1.is_finite() {
            return Err(QuadError::NonFinite { at: x1 });
        }
        if !f2.is_finite() {
            return Err(QuadError::NonFinite { at: x2 });
        }
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let value = kronrod * half;
    let floor = 50.0 * f64::EPSILON * abs_sum * half.abs();
    let error = ((kronrod - gauss) * half).abs().max(floor);
    Ok((value, error, floor))
}

/// Integrate `f` over `[a, b]` to absolute accuracy `tol`, splitting first at
/// every breakpoint strictly inside the interval.
pub fn integrate<F>(f: F, a: f64, b: f64, breakpoints: &[f64], tol: f64) -> Result<QuadResult, QuadError>
where
    F: FnMut(f64) -> f64,
{
    integrate_with_budget(f, a, b, breakpoints, tol, DEFAULT_MAX_PANELS)
}

pub fn integrate_with_budget<F>(
    mut f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: f64,
    max_panels: usize,
) -> Result<QuadResult, QuadError>
where
    F: FnMut(f64) -> f64,
{
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(QuadError::BadInterval { a, b });
    }
    if a == b {
        return Ok(QuadResult { value: 0.0, abs_error: 0.0 });
    }

    let mut edges: Vec<f64> = Vec::with_capacity(breakpoints.len() + 2);
    edges.push(a);
    edges.extend(breakpoints.iter().copied().filter(|&x| x > a && x < b));
    edges.push(b);
    edges.sort_by(f64::total_cmp);
    edges.dedup();

    let mut panels: Vec<Panel> = Vec::with_capacity(edges.len() * 2);
    for w in edges.windows(2) {
        let (value, error, floor) = gk21(&mut f, w[0], w[1])?;
        panels.push(Panel { a: w[0], b: w[1], value, error, floor });
    }

    loop {
        let total_err: f64 = panels.iter().map(|p| p.error).sum();
        if total_err <= tol {
            break;
        }
        let (worst, panel) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, p)| (i, *p))
            .expect("at least one panel");
        // Only roundoff left: refining cannot improve the estimate.
        if panel.error <= panel.floor {
            break;
        }
        let mid = 0.5 * (panel.a + panel.b);
        if panels.len() >= max_panels || mid <= panel.a || mid >= panel.b {
            let value = panels.iter().map(|p| p.value).sum();
            return Err(QuadError::NotConverged { value, abs_error: total_err });
        }
        let (v1, e1, fl1) = gk21(&mut f, panel.a, mid)?;
        let (v2, e2, fl2) = gk21(&mut f, mid, panel.b)?;
        panels[worst] = Panel { a: panel.a, b: mid, value: v1, error: e1, floor: fl1 };
        panels.push(Panel { a: mid, b: panel.b, value: v2, error: e2, floor: fl2 });
    }

    Ok(QuadResult { value: panels.iter().map(|p| p.value).sum(), abs_error: panels.iter().map(|p| p.error).sum() })
}

/// Composite Simpson rule on `n` (even) uniform panels. Used as a slow,
/// independent cross-check in tests and diagnostics.
pub fn simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = if n % 2 == 1 { n + 1 } else { n.max(2) };
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}
