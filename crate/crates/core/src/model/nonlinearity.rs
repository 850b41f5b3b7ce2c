//! Sublinear and asymptotically linear nonlinearities `f` with strictly
//! decreasing `ψ(t) = f(t)/t`.

use std::f64::consts::{FRAC_2_PI, FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{AtlasError, Result};

/// Evaluation floor for arguments of `f`, `ψ` and `f'`.
pub const T_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NonlinearityKind {
    /// `t^{p-1}`, `1 < p < 2`.
    Power { p: f64 },
    /// `β₀ t / (1 + t)`.
    Saturating { beta0: f64 },
    /// `θ₀ t + √t`.
    SqrtShift { theta0: f64 },
    /// `t (θ₀ + (β₀ - θ₀)/(1 + t))`.
    Rational { theta0: f64, beta0: f64 },
    /// `t [θ₀ + (β₀ - θ₀)(1 - (2/π) arctan t)]`.
    Arctan { theta0: f64, beta0: f64 },
}

/// Large-`t` behaviour `f(t) ~ c₀ t^{p-1}` used when `θ = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SublinearTail {
    pub p: f64,
    pub c0: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Nonlinearity {
    kind: NonlinearityKind,
    beta: f64,
    theta: f64,
    tail: Option<SublinearTail>,
    sup: Option<f64>,
}

impl Nonlinearity {
    pub fn new(kind: NonlinearityKind) -> Result<Self> {
        let (beta, theta, tail, sup) = match kind {
            NonlinearityKind::Power { p } => {
                if !(p > 1.0 && p < 2.0) {
                    return Err(AtlasError::invalid(format!(
                        "power nonlinearity needs 1 < p < 2, got p = {p}"
                    )));
                }
                (f64::INFINITY, 0.0, Some(SublinearTail { p, c0: 1.0 }), None)
            }
            NonlinearityKind::Saturating { beta0 } => {
                if !(beta0 > 0.0) || !beta0.is_finite() {
                    return Err(AtlasError::invalid(format!("beta0 must be positive, got {beta0}")));
                }
                (beta0, 0.0, None, Some(beta0))
            }
            NonlinearityKind::SqrtShift { theta0 } => {
                if !(theta0 > 0.0) || !theta0.is_finite() {
                    return Err(AtlasError::invalid(format!("theta0 must be positive, got {theta0}")));
                }
                (f64::INFINITY, theta0, None, None)
            }
            NonlinearityKind::Rational { theta0, beta0 } | NonlinearityKind::Arctan { theta0, beta0 } => {
                if !(theta0 > 0.0 && beta0 > theta0) || !beta0.is_finite() {
                    return Err(AtlasError::invalid(format!(
                        "need 0 < theta0 < beta0, got theta0 = {theta0}, beta0 = {beta0}"
                    )));
                }
                (beta0, theta0, None, None)
            }
        };
        Ok(Self {
            kind,
            beta,
            theta,
            tail,
            sup,
        })
    }

    pub fn kind(&self) -> NonlinearityKind {
        self.kind
    }

    /// `lim_{t→0⁺} f(t)/t`, possibly `+∞`.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `lim_{t→∞} f(t)/t`.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn tail(&self) -> Option<SublinearTail> {
        self.tail
    }

    /// `sup f`, when finite.
    pub fn sup(&self) -> Option<f64> {
        self.sup
    }

    /// `θ = 0` without a `t^{p-1}` tail: the growth hypothesis needed for
    /// gradient functionals is not available.
    pub fn lacks_sublinear_tail(&self) -> bool {
        self.theta == 0.0 && self.tail.is_none()
    }

    /// `f(t)`, extended by `0` for `t ≤ 0`.
    pub fn f(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let t = t.max(T_FLOOR);
        t * self.psi_unchecked(t)
    }

    /// `ψ(t) = f(t)/t` for `t > 0`.
    pub fn psi(&self, t: f64) -> f64 {
        self.psi_unchecked(t.max(T_FLOOR))
    }

    fn psi_unchecked(&self, t: f64) -> f64 {
        match self.kind {
            NonlinearityKind::Power { p } => t.powf(p - 2.0),
            NonlinearityKind::Saturating { beta0 } => beta0 / (1.0 + t),
            NonlinearityKind::SqrtShift { theta0 } => theta0 + 1.0 / t.sqrt(),
            NonlinearityKind::Rational { theta0, beta0 } => theta0 + (beta0 - theta0) / (1.0 + t),
            NonlinearityKind::Arctan { theta0, beta0 } => {
                theta0 + (beta0 - theta0) * (1.0 - FRAC_2_PI * t.atan())
            }
        }
    }

    /// `f'(t)` for `t > 0`.
    pub fn df(&self, t: f64) -> f64 {
        let t = t.max(T_FLOOR);
        match self.kind {
            NonlinearityKind::Power { p } => (p - 1.0) * t.powf(p - 2.0),
            NonlinearityKind::Saturating { beta0 } => beta0 / ((1.0 + t) * (1.0 + t)),
            NonlinearityKind::SqrtShift { theta0 } => theta0 + 0.5 / t.sqrt(),
            NonlinearityKind::Rational { theta0, beta0 } => {
                theta0 + (beta0 - theta0) / ((1.0 + t) * (1.0 + t))
            }
            NonlinearityKind::Arctan { theta0, beta0 } => {
                self.psi_unchecked(t) - (beta0 - theta0) * FRAC_2_PI * t / (1.0 + t * t)
            }
        }
    }

    /// Antiderivative `F(t) = ∫₀ᵗ f`, zero for `t ≤ 0`.
    pub fn antiderivative(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        // t - ln(1+t), accurate for small t
        let t_minus_log1p = |t: f64| {
            if t < 1e-4 {
                t * t * (0.5 - t * (1.0 / 3.0 - t * 0.25))
            } else {
                t - t.ln_1p()
            }
        };
        match self.kind {
            NonlinearityKind::Power { p } => t.powf(p) / p,
            NonlinearityKind::Saturating { beta0 } => beta0 * t_minus_log1p(t),
            NonlinearityKind::SqrtShift { theta0 } => 0.5 * theta0 * t * t + 2.0 / 3.0 * t * t.sqrt(),
            NonlinearityKind::Rational { theta0, beta0 } => {
                0.5 * theta0 * t * t + (beta0 - theta0) * t_minus_log1p(t)
            }
            NonlinearityKind::Arctan { theta0, beta0 } => {
                // ∫ τ arctan τ = ((τ²+1) arctan τ - τ)/2
                let c = beta0 - theta0;
                0.5 * theta0 * t * t + c * (0.5 * t * t - ((t * t + 1.0) * t.atan() - t) / PI)
            }
        }
    }

    /// `ψ⁻¹(y)` for `θ < y < β`, in closed form.
    pub fn psi_inverse(&self, y: f64) -> Result<f64> {
        self.check_psi_range(y)?;
        let t = match self.kind {
            NonlinearityKind::Power { p } => y.powf(1.0 / (p - 2.0)),
            NonlinearityKind::Saturating { beta0 } => beta0 / y - 1.0,
            NonlinearityKind::SqrtShift { theta0 } => {
                let d = y - theta0;
                1.0 / (d * d)
            }
            NonlinearityKind::Rational { theta0, beta0 } => (beta0 - theta0) / (y - theta0) - 1.0,
            NonlinearityKind::Arctan { theta0, beta0 } => {
                let r = (y - theta0) / (beta0 - theta0);
                (FRAC_PI_2 * (1.0 - r)).tan()
            }
        };
        Ok(t)
    }

    /// `ψ⁻¹(y)` by bisection on the strictly decreasing `ψ` with an
    /// exponentially expanded bracket. Independent of the closed forms.
    pub fn psi_inverse_bisect(&self, y: f64) -> Result<f64> {
        self.check_psi_range(y)?;
        let (mut lo, mut hi) = (1.0f64, 1.0f64);
        while self.psi(lo) <= y {
            lo *= 0.5;
            if lo < 1e-300 {
                return Err(AtlasError::RefinementExhausted("psi bracket (low side)".into()));
            }
        }
        while self.psi(hi) >= y {
            hi *= 2.0;
            if hi > 1e300 {
                return Err(AtlasError::RefinementExhausted("psi bracket (high side)".into()));
            }
        }
        // bisect in log space so tiny and huge roots both converge
        let (a, b) = crate::numeric::bisect(|x| self.psi(x.exp()) - y, lo.ln(), hi.ln(), 1e-15);
        Ok((0.5 * (a + b)).exp())
    }

    fn check_psi_range(&self, y: f64) -> Result<()> {
        if !(y > self.theta && y < self.beta) {
            return Err(AtlasError::OutOfRange {
                value: y,
                lo: self.theta,
                hi: self.beta,
            });
        }
        Ok(())
    }

    /// Short human-readable label.
    pub fn label(&self) -> String {
        match self.kind {
            NonlinearityKind::Power { p } => format!("power(p={p})"),
            NonlinearityKind::Saturating { beta0 } => format!("saturating(beta0={beta0})"),
            NonlinearityKind::SqrtShift { theta0 } => format!("sqrt_shift(theta0={theta0})"),
            NonlinearityKind::Rational { theta0, beta0 } => {
                format!("rational(theta0={theta0},beta0={beta0})")
            }
            NonlinearityKind::Arctan { theta0, beta0 } => {
                format!("arctan(theta0={theta0},beta0={beta0})")
            }
        }
    }
}

/// One representative of every catalogue kind.
pub fn catalogue() -> Vec<Nonlinearity> {
    [
        NonlinearityKind::Power { p: 1.5 },
        NonlinearityKind::Saturating { beta0: 2.0 },
        NonlinearityKind::SqrtShift { theta0: 1.0 },
        NonlinearityKind::Rational { theta0: 0.5, beta0: 3.0 },
        NonlinearityKind::Arctan { theta0: 0.5, beta0: 3.0 },
    ]
    .into_iter()
    .map(|k| Nonlinearity::new(k).expect("catalogue parameters are admissible"))
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::geomspace;
    use proptest::prelude::*;

    #[test]
    fn catalogue_limits() {
        let p = Nonlinearity::new(NonlinearityKind::Power { p: 1.5 }).unwrap();
        assert_eq!(p.beta(), f64::INFINITY);
        assert_eq!(p.theta(), 0.0);
        assert_eq!(p.tail(), Some(SublinearTail { p: 1.5, c0: 1.0 }));
        assert!(p.sup().is_none());

        let s = Nonlinearity::new(NonlinearityKind::Saturating { beta0: 2.0 }).unwrap();
        assert_eq!((s.beta(), s.theta(), s.sup()), (2.0, 0.0, Some(2.0)));
        assert!(s.tail().is_none() && s.lacks_sublinear_tail());
        assert!((s.f(3.0) - 1.5).abs() < 1e-15);

        let q = Nonlinearity::new(NonlinearityKind::SqrtShift { theta0: 1.0 }).unwrap();
        assert_eq!((q.beta(), q.theta()), (f64::INFINITY, 1.0));
        assert!((q.f(4.0) - 6.0).abs() < 1e-14);
        assert!(q.sup().is_none());
    }

    #[test]
    fn rejects_inadmissible_parameters() {
        assert!(Nonlinearity::new(NonlinearityKind::Power { p: 2.0 }).is_err());
        assert!(Nonlinearity::new(NonlinearityKind::Power { p: 2.5 }).is_err());
        assert!(Nonlinearity::new(NonlinearityKind::Saturating { beta0: 0.0 }).is_err());
        assert!(Nonlinearity::new(NonlinearityKind::Rational { theta0: 2.0, beta0: 1.0 }).is_err());
    }

    #[test]
    fn psi_inverse_examples() {
        let p = Nonlinearity::new(NonlinearityKind::Power { p: 1.5 }).unwrap();
        assert!((p.psi_inverse(4.0).unwrap() - 0.0625).abs() < 1e-15);
        let s = Nonlinearity::new(NonlinearityKind::Saturating { beta0: 2.0 }).unwrap();
        assert!((s.psi_inverse(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(s.psi_inverse(3.0), Err(AtlasError::OutOfRange { .. })));
    }

    #[test]
    fn hypotheses_hold_on_log_grid() {
        let grid = geomspace(1e-8, 1e8, 10_000);
        for nl in catalogue() {
            let mut prev = f64::INFINITY;
            for &t in &grid {
                let f = nl.f(t);
                assert!(f > 0.0, "{}: f({t}) = {f}", nl.label());
                let psi = nl.psi(t);
                assert!(psi < prev, "{}: psi not decreasing at {t}", nl.label());
                assert!(psi > nl.theta() && psi < nl.beta());
                prev = psi;
                // f is nondecreasing and concave: f' ≥ 0 and f' < ψ
                let d = nl.df(t);
                assert!(d >= 0.0 && d < psi * (1.0 + 1e-12), "{}: df at {t}", nl.label());
            }
            assert_eq!(nl.f(0.0), 0.0);
        }
    }

    #[test]
    fn sublinear_tail_matches() {
        let nl = Nonlinearity::new(NonlinearityKind::Power { p: 1.3 }).unwrap();
        let tail = nl.tail().unwrap();
        for t in [1e3, 1e4, 1e5] {
            let r = nl.f(t) / t.powf(tail.p - 1.0);
            assert!((r - tail.c0).abs() < 0.05 * tail.c0);
        }
    }

    #[test]
    fn antiderivative_matches_quadrature() {
        for nl in catalogue() {
            for &t in &[1e-3, 0.7, 5.0, 40.0] {
                let n = 20_000;
                let h = t / n as f64;
                // composite Simpson
                let mut acc = nl.f(0.0) + nl.f(t);
                for k in 1..n {
                    let w = if k % 2 == 1 { 4.0 } else { 2.0 };
                    acc += w * nl.f(k as f64 * h);
                }
                let simpson = acc * h / 3.0;
                let exact = nl.antiderivative(t);
                assert!(
                    (simpson - exact).abs() <= 1e-6 * exact.abs().max(1e-12),
                    "{} at t={t}: {simpson} vs {exact}",
                    nl.label()
                );
            }
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        for nl in catalogue() {
            for &t in &[0.01, 0.5, 3.0, 100.0] {
                let e = 1e-6 * t;
                let fd = (nl.f(t + e) - nl.f(t - e)) / (2.0 * e);
                assert!((fd - nl.df(t)).abs() < 1e-6 * (1.0 + fd.abs()), "{}", nl.label());
            }
        }
    }

    proptest! {
        #[test]
        fn psi_inverse_is_two_sided(u in 0.001f64..0.999, idx in 0usize..5) {
            let nl = &catalogue()[idx];
            let lo = nl.theta() + 1e-6;
            let hi = if nl.beta().is_finite() { nl.beta() - 1e-6 } else { 1e6 };
            let y = lo + u * (hi - lo);
            let t = nl.psi_inverse(y).unwrap();
            prop_assert!((nl.psi(t) - y).abs() <= 1e-10 * y);
            let tb = nl.psi_inverse_bisect(y).unwrap();
            prop_assert!((tb - t).abs() <= 1e-9 * t.max(1e-300));
        }
    }
}
