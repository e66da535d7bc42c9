//! Partition of `[0, t)` by the sign of a coefficient.

use alloc::vec::Vec;

use crate::timefn::TimeFn;

#[cfg(feature = "serde")]
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Sign {
    Positive,
    Negative,
    Zero,
}

impl Sign {
    pub fn of(x: f64) -> Sign {
        if x > 0.0 {
            Sign::Positive
        } else if x < 0.0 {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }
}

/// Half-open interval `[a, b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

impl Interval {
    pub fn len(&self) -> f64 {
        self.b - self.a
    }

    pub fn is_empty(&self) -> bool {
        self.b <= self.a
    }
}

/// Disjoint positive, negative and zero sets of a function on `[0, t)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize))]
pub struct SignPartition {
    pub pos_intervals: Vec<Interval>,
    pub neg_intervals: Vec<Interval>,
    pub zero_intervals: Vec<Interval>,
}

impl SignPartition {
    /// Builds the partition over `[t0, t1)`. Jumps come from the function's
    /// breakpoints; continuous sign changes are located by sampling each
    /// smooth piece at `samples_per_piece` points (more for fast
    /// sinusoids) and bisecting every bracketed root.
    pub fn build(f: &TimeFn, t0: f64, t1: f64, samples_per_piece: usize) -> Self {
        let mut cuts = Vec::new();
        cuts.push(t0);
        cuts.extend(f.breakpoints(t0, t1));
        cuts.push(t1);

        let mut bounds = cuts.clone();
        for w in cuts.windows(2) {
            let (u, v) = (w[0], w[1]);
            if v <= u {
                continue;
            }
            let n = samples_per_piece.max(8).max(oscillation_samples(f, v - u));
            // interior samples only; values at `u` are right limits and at
            // `v` left limits
            let at = |k: usize| -> (f64, f64) {
                let x = if k == 0 {
                    u
                } else if k == n {
                    v
                } else {
                    u + (v - u) * k as f64 / n as f64
                };
                let y = if k == n { f.value_left(x) } else { f.value(x) };
                (x, y)
            };
            let mut prev = at(0);
            for k in 1..=n {
                let cur = at(k);
                let (sp, sc) = (Sign::of(prev.1), Sign::of(cur.1));
                if sp != sc {
                    if sp == Sign::Zero {
                        bounds.push(prev.0);
                    } else if sc == Sign::Zero {
                        if k < n {
                            bounds.push(cur.0);
                        }
                    } else {
                        bounds.push(bisect(f, prev.0, cur.0, sp));
                    }
                }
                prev = cur;
            }
        }
        bounds.sort_by(f64::total_cmp);
        bounds.dedup();

        let mut out =
            SignPartition { pos_intervals: Vec::new(), neg_intervals: Vec::new(), zero_intervals: Vec::new() };
        let mut current: Option<(Sign, Interval)> = None;
        for w in bounds.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let sign = Sign::of(f.value(0.5 * (a + b)));
            current = match current {
                Some((s, iv)) if s == sign && iv.b == a => Some((s, Interval { a: iv.a, b })),
                Some((s, iv)) => {
                    out.push(s, iv);
                    Some((sign, Interval { a, b }))
                }
                None => Some((sign, Interval { a, b })),
            };
        }
        if let Some((s, iv)) = current {
            out.push(s, iv);
        }
        out
    }

    fn push(&mut self, s: Sign, iv: Interval) {
        match s {
            Sign::Positive => self.pos_intervals.push(iv),
            Sign::Negative => self.neg_intervals.push(iv),
            Sign::Zero => self.zero_intervals.push(iv),
        }
    }

    pub fn measure(&self) -> f64 {
        self.pos_intervals.iter().chain(&self.neg_intervals).chain(&self.zero_intervals).map(Interval::len).sum()
    }

    /// All intervals with their sign, ordered by start.
    pub fn ordered(&self) -> Vec<(Sign, Interval)> {
        let mut v: Vec<(Sign, Interval)> = self
            .pos_intervals
            .iter()
            .map(|i| (Sign::Positive, *i))
            .chain(self.neg_intervals.iter().map(|i| (Sign::Negative, *i)))
            .chain(self.zero_intervals.iter().map(|i| (Sign::Zero, *i)))
            .collect();
        v.sort_by(|x, y| x.1.a.total_cmp(&y.1.a));
        v
    }

    /// Interior boundaries between intervals.
    pub fn boundaries(&self) -> Vec<f64> {
        let ord = self.ordered();
        ord.iter().skip(1).map(|(_, iv)| iv.a).collect()
    }
}

fn oscillation_samples(f: &TimeFn, len: f64) -> usize {
    let mut min_period = f64::INFINITY;
    smallest_period(f, &mut min_period);
    if min_period.is_finite() {
        (32.0 * len / min_period).min(1e6) as usize
    } else {
        0
    }
}

fn smallest_period(f: &TimeFn, acc: &mut f64) {
    match f {
        TimeFn::Sinusoid { period, .. } => *acc = acc.min(*period),
        TimeFn::Sum { terms } => terms.iter().for_each(|t| smallest_period(t, acc)),
        TimeFn::Scaled { inner, .. } | TimeFn::Exp { inner, .. } => smallest_period(inner, acc),
        _ => {}
    }
}

fn bisect(f: &TimeFn, mut lo: f64, mut hi: f64, lo_sign: Sign) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if Sign::of(f.value(mid)) == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn nonnegative_function_has_no_negative_set() {
        let p = SignPartition::build(&TimeFn::constant(0.3), 0.0, 5.0, 16);
        assert!(p.neg_intervals.is_empty());
        assert_eq!(p.pos_intervals, vec![Interval { a: 0.0, b: 5.0 }]);
    }

    #[test]
    fn sinusoid_roots_are_located() {
        let f = TimeFn::sinusoid(0.0, 1.0, 2.0, 0.0);
        let p = SignPartition::build(&f, 0.0, 4.0, 16);
        assert_eq!(p.pos_intervals.len(), 2);
        assert_eq!(p.neg_intervals.len(), 2);
        assert!((p.neg_intervals[0].a - 1.0).abs() < 1e-12);
        assert!((p.measure() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn piecewise_zero_interval() {
        let f = TimeFn::piecewise_constant(vec![1.0, 2.0], vec![1.0, 0.0, -1.0]);
        let p = SignPartition::build(&f, 0.0, 3.0, 8);
        assert_eq!(p.zero_intervals, vec![Interval { a: 1.0, b: 2.0 }]);
        assert_eq!(p.neg_intervals, vec![Interval { a: 2.0, b: 3.0 }]);
        assert_eq!(p.boundaries(), vec![1.0, 2.0]);
    }
}
