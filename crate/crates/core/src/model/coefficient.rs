//! Degenerate coefficients `a ≥ 0` with isolated zeros `0 = t₀ < t₁ < … < t_k`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{AtlasError, Result};
use crate::numeric::{bisect, dense_max};

/// Zero-verification tolerance `|a(t_i)| ≤ TOL_ZERO`.
pub const TOL_ZERO: f64 = 1e-10;

/// Grid size for the per-window maximum scan.
const MAX_SCAN: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoefficientKind {
    /// `|sin α|`, zeros at `iπ`.
    AbsSin,
    /// `|sin α| α^{(p-2)/γ}`, zeros at `iπ`.
    AbsSinPowerWeight { p: f64, gamma: f64 },
    /// `|c ∏ (α - r_j)|` with repeated roots allowed; zeros are the distinct
    /// positive roots.
    PolynomialBumps {
        roots: Vec<f64>,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `|σ(α)|` for the piecewise-linear interpolant `σ` of `(α, σ)` samples;
    /// zeros are located by sign change plus `declared_zeros`.
    UserTable { points: Vec<[f64; 2]> },
}

fn one() -> f64 {
    1.0
}

/// Programmatic coefficient: a closure plus its declared positive zeros.
#[derive(Clone)]
pub struct CustomCoefficient {
    pub name: String,
    pub func: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub zeros: Vec<f64>,
}

impl fmt::Debug for CustomCoefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomCoefficient")
            .field("name", &self.name)
            .field("zeros", &self.zeros)
            .finish()
    }
}

#[derive(Debug, Clone)]
enum Repr {
    Kind(CoefficientKind),
    Custom(CustomCoefficient),
}

/// One degeneracy window `(t_i, t_{i+1})` with `A_i = max a` on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub index: usize,
    pub lo: f64,
    pub hi: f64,
    pub max_value: f64,
    pub argmax: f64,
}

impl Window {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone)]
pub struct Coefficient {
    repr: Repr,
    zeros: Vec<f64>,
    windows: Vec<Window>,
}

/// Parameters accompanying a [`CoefficientKind`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRange {
    /// Maximum number of windows to keep.
    pub k_max: Option<usize>,
    /// Right end of the scanned range (tables and polynomials).
    pub range_end: Option<f64>,
    /// Tangential zeros a sign scan cannot see.
    #[serde(default)]
    pub declared_zeros: Vec<f64>,
}

impl Coefficient {
    pub fn new(kind: CoefficientKind, range: &CoefficientRange) -> Result<Self> {
        let zeros = match &kind {
            CoefficientKind::AbsSin | CoefficientKind::AbsSinPowerWeight { .. } => {
                if let CoefficientKind::AbsSinPowerWeight { p, gamma } = kind {
                    if !(gamma > 0.0) || !p.is_finite() || p == 2.0 {
                        return Err(AtlasError::invalid(format!(
                            "abs_sin_power_weight needs gamma > 0 and p != 2, got p={p}, gamma={gamma}"
                        )));
                    }
                    if (p - 2.0) / gamma <= -1.0 {
                        return Err(AtlasError::invalid(
                            "weight exponent (p-2)/gamma must exceed -1 so that a(0) = 0",
                        ));
                    }
                }
                let k = range.k_max.ok_or_else(|| AtlasError::invalid("sin coefficients need k_max"))?;
                (0..=k).map(|i| i as f64 * PI).collect()
            }
            CoefficientKind::PolynomialBumps { roots, scale } => {
                if roots.is_empty() || !(*scale > 0.0) {
                    return Err(AtlasError::invalid("polynomial_bumps needs roots and a positive scale"));
                }
                let mut z: Vec<f64> = roots.iter().copied().filter(|&r| r > 0.0).collect();
                if let Some(end) = range.range_end {
                    z.retain(|&r| r <= end);
                }
                z.extend(range.declared_zeros.iter().copied());
                normalize_zeros(z)
            }
            CoefficientKind::UserTable { points } => {
                if points.len() < 2 || points.windows(2).any(|w| !(w[1][0] > w[0][0])) {
                    return Err(AtlasError::invalid("user_table needs >= 2 points with increasing abscissae"));
                }
                let mut z = table_sign_changes(points);
                z.extend(points.iter().filter(|p| p[1] == 0.0 && p[0] > 0.0).map(|p| p[0]));
                z.extend(range.declared_zeros.iter().copied());
                normalize_zeros(z)
            }
        };
        Self::finish(Repr::Kind(kind), zeros, range.k_max)
    }

    pub fn custom(custom: CustomCoefficient, k_max: Option<usize>) -> Result<Self> {
        let zeros = normalize_zeros(custom.zeros.clone());
        Self::finish(Repr::Custom(custom), zeros, k_max)
    }

    fn finish(repr: Repr, mut zeros: Vec<f64>, k_max: Option<usize>) -> Result<Self> {
        if zeros.len() < 2 {
            return Err(AtlasError::invalid("no positive zeros found in range"));
        }
        if let Some(k) = k_max {
            zeros.truncate(k + 1);
        }
        let mut coef = Self {
            repr,
            zeros,
            windows: Vec::new(),
        };
        coef.validate()?;
        coef.windows = (0..coef.zeros.len() - 1)
            .map(|i| {
                let (lo, hi) = (coef.zeros[i], coef.zeros[i + 1]);
                let (argmax, max_value) = dense_max(|x| coef.eval(x), lo, hi, MAX_SCAN);
                Window {
                    index: i,
                    lo,
                    hi,
                    max_value,
                    argmax,
                }
            })
            .collect();
        Ok(coef)
    }

    fn validate(&self) -> Result<()> {
        for &t in &self.zeros[1..] {
            let v = self.eval(t);
            if v.abs() > TOL_ZERO {
                return Err(AtlasError::invalid(format!("a({t}) = {v} is not a zero")));
            }
        }
        for w in self.zeros.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let off = 1e-3 * (hi - lo);
            for k in 0..=1024 {
                let x = lo + off + (hi - lo - 2.0 * off) * k as f64 / 1024.0;
                let v = self.eval(x);
                if !(v > 0.0) || !v.is_finite() {
                    return Err(AtlasError::invalid(format!(
                        "coefficient not positive inside window ({lo}, {hi}): a({x}) = {v}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `a(α)` for `α ≥ 0`.
    pub fn eval(&self, alpha: f64) -> f64 {
        match &self.repr {
            Repr::Kind(CoefficientKind::AbsSin) => alpha.sin().abs(),
            Repr::Kind(CoefficientKind::AbsSinPowerWeight { p, gamma }) => {
                if alpha <= 0.0 {
                    0.0
                } else {
                    alpha.sin().abs() * alpha.powf((p - 2.0) / gamma)
                }
            }
            Repr::Kind(CoefficientKind::PolynomialBumps { roots, scale }) => {
                (scale * roots.iter().map(|r| alpha - r).product::<f64>()).abs()
            }
            Repr::Kind(CoefficientKind::UserTable { points }) => table_eval(points, alpha).abs(),
            Repr::Custom(c) => (c.func)(alpha),
        }
    }

    /// `t₀ = 0 < t₁ < … < t_k`.
    pub fn zeros(&self) -> &[f64] {
        &self.zeros
    }

    pub fn windows(&self) -> &[Window] {
        &self.windows
    }

    pub fn window(&self, i: usize) -> Result<&Window> {
        self.windows
            .get(i)
            .ok_or_else(|| AtlasError::invalid(format!("window {i} out of range (k = {})", self.windows.len())))
    }

    pub fn kind(&self) -> Option<&CoefficientKind> {
        match &self.repr {
            Repr::Kind(k) => Some(k),
            Repr::Custom(_) => None,
        }
    }

    pub fn label(&self) -> String {
        match &self.repr {
            Repr::Kind(CoefficientKind::AbsSin) => "abs_sin".into(),
            Repr::Kind(CoefficientKind::AbsSinPowerWeight { p, gamma }) => {
                format!("abs_sin_power_weight(p={p},gamma={gamma})")
            }
            Repr::Kind(CoefficientKind::PolynomialBumps { roots, .. }) => {
                format!("polynomial_bumps(roots={roots:?})")
            }
            Repr::Kind(CoefficientKind::UserTable { points }) => format!("user_table({} points)", points.len()),
            Repr::Custom(c) => c.name.clone(),
        }
    }
}

fn normalize_zeros(mut z: Vec<f64>) -> Vec<f64> {
    z.retain(|&t| t > 0.0);
    z.push(0.0);
    z.sort_by(|a, b| a.partial_cmp(b).expect("finite zeros"));
    z.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
    z
}

fn table_eval(points: &[[f64; 2]], x: f64) -> f64 {
    let n = points.len();
    if x <= points[0][0] {
        return points[0][1];
    }
    if x >= points[n - 1][0] {
        return points[n - 1][1];
    }
    let k = points.partition_point(|p| p[0] <= x) - 1;
    let (x0, y0) = (points[k][0], points[k][1]);
    let (x1, y1) = (points[k + 1][0], points[k + 1][1]);
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

fn table_sign_changes(points: &[[f64; 2]]) -> Vec<f64> {
    points
        .windows(2)
        .filter(|w| w[0][1] * w[1][1] < 0.0)
        .map(|w| {
            let (lo, hi) = bisect(|x| table_eval(points, x), w[0][0], w[1][0], 1e-14);
            0.5 * (lo + hi)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn range(k: usize) -> CoefficientRange {
        CoefficientRange {
            k_max: Some(k),
            ..Default::default()
        }
    }

    #[test]
    fn abs_sin_structure() {
        let c = Coefficient::new(CoefficientKind::AbsSin, &range(3)).unwrap();
        let expect = [0.0, PI, 2.0 * PI, 3.0 * PI];
        for (z, e) in c.zeros().iter().zip(expect) {
            assert!((z - e).abs() < 1e-15);
        }
        assert_eq!(c.windows().len(), 3);
        for w in c.windows() {
            assert!((w.max_value - 1.0).abs() < 1e-14);
            assert!((w.argmax - (w.lo + PI / 2.0)).abs() < 1e-6);
        }
    }

    #[test]
    fn power_weight_maxima_match_brute_scan() {
        let c = Coefficient::new(CoefficientKind::AbsSinPowerWeight { p: 1.5, gamma: 1.0 }, &range(3)).unwrap();
        for w in c.windows() {
            let n = 1_000_000;
            let brute = (0..=n)
                .map(|k| c.eval(w.lo + w.width() * k as f64 / n as f64))
                .fold(0.0f64, f64::max);
            assert!(w.max_value >= brute - 1e-12);
            assert!((w.max_value - brute).abs() < 1e-9 * brute);
        }
    }

    #[test]
    fn polynomial_bumps_with_double_root() {
        let c = Coefficient::new(
            CoefficientKind::PolynomialBumps {
                roots: vec![0.0, 1.0, 2.0, 2.0],
                scale: 1.0,
            },
            &CoefficientRange::default(),
        )
        .unwrap();
        assert_eq!(c.zeros(), &[0.0, 1.0, 2.0]);
        assert_eq!(c.windows().len(), 2);
        assert!((c.eval(0.5) - 0.5 * 0.5 * 1.5 * 1.5).abs() < 1e-15);
    }

    #[test]
    fn table_zeros_by_sign_change_and_declaration() {
        let pts = vec![[0.0, 0.0], [1.0, 1.0], [2.0, -1.0], [3.0, 0.5], [4.0, 0.0], [5.0, 1.0], [6.0, 0.0]];
        let c = Coefficient::new(
            CoefficientKind::UserTable { points: pts.clone() },
            &CoefficientRange::default(),
        )
        .unwrap();
        // sign changes at 1.5 and 2+2/3; exact zeros at 4 and 6
        let z = c.zeros();
        assert_eq!(z.len(), 5);
        assert!((z[1] - 1.5).abs() < 1e-12);
        assert!((z[2] - (2.0 + 2.0 / 3.0)).abs() < 1e-12);
        assert_eq!(&z[3..], &[4.0, 6.0]);

        // a tangential zero that no scan sees must be declared
        let bump = vec![[0.0, 0.0], [1.0, 1.0], [2.0, 1e-3], [3.0, 1.0], [4.0, 0.0]];
        let plain = Coefficient::new(CoefficientKind::UserTable { points: bump.clone() }, &CoefficientRange::default())
            .unwrap();
        assert_eq!(plain.zeros(), &[0.0, 4.0]);
    }

    #[test]
    fn rejects_bad_coefficients() {
        // declared zero where a is not zero
        let bad = CoefficientRange {
            declared_zeros: vec![0.5],
            ..Default::default()
        };
        assert!(Coefficient::new(
            CoefficientKind::PolynomialBumps { roots: vec![0.0, 1.0], scale: 1.0 },
            &bad
        )
        .is_err());
        // no zeros at all
        assert!(Coefficient::new(
            CoefficientKind::UserTable { points: vec![[0.0, 1.0], [1.0, 2.0]] },
            &CoefficientRange::default()
        )
        .is_err());
        // negative closure inside a window
        let neg = CustomCoefficient {
            name: "neg".into(),
            func: Arc::new(|x: f64| (x * (1.0 - x)) * (x - 0.5)),
            zeros: vec![1.0],
        };
        assert!(Coefficient::custom(neg, None).is_err());
        assert!(Coefficient::new(CoefficientKind::AbsSin, &CoefficientRange::default()).is_err());
    }

    #[test]
    fn zero_audit_for_catalogue() {
        for kind in [
            CoefficientKind::AbsSin,
            CoefficientKind::AbsSinPowerWeight { p: 1.5, gamma: 2.0 },
            CoefficientKind::AbsSinPowerWeight { p: 3.0, gamma: 1.0 },
        ] {
            let c = Coefficient::new(kind, &range(4)).unwrap();
            for &t in c.zeros() {
                assert!(c.eval(t) <= 1e-10, "{}: a({t}) = {}", c.label(), c.eval(t));
            }
        }
    }
}
