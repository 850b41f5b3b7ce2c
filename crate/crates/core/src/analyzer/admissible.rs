//! The admissible set `D_λ = {α : θλ/λ₁ < a(α) < βλ/λ₁}` inside one window
//! and the classification of its maximal intervals.

use std::fmt;

use serde::Serialize;

use crate::model::{Coefficient, Nonlinearity};
use crate::numeric::bisect;

/// Which level an interval endpoint sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EndKind {
    /// `a = θλ/λ₁` (or a zero of `a`): `λ/a` runs to the top of the range and
    /// `P → ∞`.
    Coercive,
    /// `a = βλ/λ₁`: `λ/a` runs to `λ₁/β` and `P → 0`. Such endpoints belong
    /// to the extended set.
    Vanishing,
}

impl EndKind {
    fn tag(self) -> &'static str {
        match self {
            EndKind::Coercive => "inf",
            EndKind::Vanishing => "0",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum IntervalType {
    InfInf,
    InfZero,
    ZeroInf,
    ZeroZero,
}

impl fmt::Display for IntervalType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IntervalType::InfInf => "I_inf_inf",
            IntervalType::InfZero => "I_inf_0",
            IntervalType::ZeroInf => "I_0_inf",
            IntervalType::ZeroZero => "I_0_0",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibleInterval {
    pub lo: f64,
    pub hi: f64,
    pub left: EndKind,
    pub right: EndKind,
}

impl AdmissibleInterval {
    pub fn kind(&self) -> IntervalType {
        match (self.left, self.right) {
            (EndKind::Coercive, EndKind::Coercive) => IntervalType::InfInf,
            (EndKind::Coercive, EndKind::Vanishing) => IntervalType::InfZero,
            (EndKind::Vanishing, EndKind::Coercive) => IntervalType::ZeroInf,
            (EndKind::Vanishing, EndKind::Vanishing) => IntervalType::ZeroZero,
        }
    }

    pub fn type_tag(&self) -> String {
        format!("I_{}_{}", self.left.tag(), self.right.tag())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibleSet {
    pub window: usize,
    pub window_lo: f64,
    pub window_hi: f64,
    pub lambda: f64,
    /// `θλ/λ₁` and `βλ/λ₁`.
    pub low_level: f64,
    pub high_level: f64,
    pub intervals: Vec<AdmissibleInterval>,
}

impl AdmissibleSet {
    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Interval of the extended set containing `α`, if any.
    pub fn locate(&self, alpha: f64) -> Option<&AdmissibleInterval> {
        self.intervals.iter().find(|iv| {
            let left_ok = alpha > iv.lo || (alpha == iv.lo && iv.left == EndKind::Vanishing);
            let right_ok = alpha < iv.hi || (alpha == iv.hi && iv.right == EndKind::Vanishing);
            left_ok && right_ok
        })
    }

    pub fn all_inf_inf(&self) -> bool {
        self.intervals.iter().all(|iv| iv.kind() == IntervalType::InfInf)
    }

    /// Every `I_inf_0` is followed, not necessarily immediately, by an
    /// `I_0_inf`.
    pub fn inf0_followed_by_0inf(&self) -> bool {
        self.intervals.iter().enumerate().all(|(k, iv)| {
            iv.kind() != IntervalType::InfZero
                || self.intervals[k + 1..].iter().any(|j| j.kind() == IntervalType::ZeroInf)
        })
    }
}

/// Scan `a` against the two levels on `scan_points` uniform cells (plus the
/// window argmax) and refine each crossing by bisection.
pub fn admissible_set(
    coef: &Coefficient,
    window: usize,
    lambda: f64,
    nl: &Nonlinearity,
    lambda1: f64,
    scan_points: usize,
) -> AdmissibleSet {
    let w = coef.windows()[window];
    let low = nl.theta() * lambda / lambda1;
    let high = if nl.beta().is_infinite() {
        f64::INFINITY
    } else {
        nl.beta() * lambda / lambda1
    };
    let mut set = AdmissibleSet {
        window,
        window_lo: w.lo,
        window_hi: w.hi,
        lambda,
        low_level: low,
        high_level: high,
        intervals: Vec::new(),
    };
    if !(lambda > 0.0) || w.max_value <= low {
        return set;
    }
    let n = scan_points.max(16);
    let mut grid: Vec<f64> = (0..=n).map(|k| w.lo + w.width() * k as f64 / n as f64).collect();
    grid[n] = w.hi;
    if w.argmax > w.lo && w.argmax < w.hi {
        let pos = grid.partition_point(|&x| x < w.argmax);
        if grid[pos] != w.argmax {
            grid.insert(pos, w.argmax);
        }
    }
    let mut vals: Vec<f64> = grid.iter().map(|&x| coef.eval(x)).collect();
    // window ends are zeros of `a`; pin them so rounding cannot admit them
    let last = vals.len() - 1;
    vals[0] = 0.0;
    vals[last] = 0.0;
    let inside = |v: f64| v > low && v < high;
    // endpoint between an outside node `xo` and an inside node `xi`
    let crossing = |xo: f64, vo: f64, xi: f64| -> (f64, EndKind) {
        let (level, kind) = if vo <= low {
            (low, EndKind::Coercive)
        } else {
            (high, EndKind::Vanishing)
        };
        // the first bracket end stays on the outside, so the interval closes
        // exactly on the level set
        let g = |x: f64| coef.eval(x) - level;
        if (g(xo) < 0.0) == (g(xi) < 0.0) {
            // pinned window end
            return (xo, kind);
        }
        let (x, _) = bisect(g, xo, xi, 1e-12);
        (x, kind)
    };
    let mut k = 0;
    while k < grid.len() {
        if !inside(vals[k]) {
            k += 1;
            continue;
        }
        let start = k;
        while k < grid.len() && inside(vals[k]) {
            k += 1;
        }
        let end = k - 1;
        let (lo, left) = crossing(grid[start - 1], vals[start - 1], grid[start]);
        let (hi, right) = crossing(grid[end + 1], vals[end + 1], grid[end]);
        set.intervals.push(AdmissibleInterval { lo, hi, left, right });
    }
    set
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CoefficientKind, CoefficientRange, NonlinearityKind};
    use std::f64::consts::PI;

    fn abs_sin(k: usize) -> Coefficient {
        Coefficient::new(
            CoefficientKind::AbsSin,
            &CoefficientRange {
                k_max: Some(k),
                ..Default::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn purely_sublinear_window_is_one_coercive_interval() {
        let nl = Nonlinearity::new(NonlinearityKind::Power { p: 1.5 }).unwrap();
        let set = admissible_set(&abs_sin(1), 0, 0.7, &nl, PI * PI, 4096);
        assert_eq!(set.intervals.len(), 1);
        let iv = set.intervals[0];
        assert_eq!(iv.kind(), IntervalType::InfInf);
        assert!(iv.lo.abs() < 1e-12 && (iv.hi - PI).abs() < 1e-12);
    }

    #[test]
    fn theta_level_cuts_the_window() {
        let nl = Nonlinearity::new(NonlinearityKind::SqrtShift { theta0: 1.0 }).unwrap();
        let set = admissible_set(&abs_sin(1), 0, PI * PI / 2.0, &nl, PI * PI, 4096);
        assert_eq!(set.intervals.len(), 1);
        let iv = set.intervals[0];
        assert!((iv.lo - PI / 6.0).abs() < 1e-11);
        assert!((iv.hi - 5.0 * PI / 6.0).abs() < 1e-11);
        assert_eq!(iv.kind(), IntervalType::InfInf);
    }

    #[test]
    fn beta_level_splits_the_window() {
        let nl = Nonlinearity::new(NonlinearityKind::Saturating { beta0: 2.0 }).unwrap();
        let l1 = PI * PI;
        let set = admissible_set(&abs_sin(1), 0, 3.0, &nl, l1, 4096);
        assert_eq!(set.intervals.len(), 2);
        let c = (6.0 / l1).asin();
        assert!((set.intervals[0].hi - c).abs() < 1e-11);
        assert!((set.intervals[1].lo - (PI - c)).abs() < 1e-11);
        assert_eq!(set.intervals[0].kind(), IntervalType::InfZero);
        assert_eq!(set.intervals[1].kind(), IntervalType::ZeroInf);
        assert!(set.inf0_followed_by_0inf());
        assert!(!set.all_inf_inf());
        assert!(set.locate(c).is_some());
        assert!(set.locate(PI / 2.0).is_none());
    }

    #[test]
    fn empty_above_the_coercive_limit() {
        let nl = Nonlinearity::new(NonlinearityKind::SqrtShift { theta0: 1.0 }).unwrap();
        let set = admissible_set(&abs_sin(1), 0, 1.01 * PI * PI, &nl, PI * PI, 4096);
        assert!(set.is_empty());
    }
}
