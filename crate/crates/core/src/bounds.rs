//! Analytic sandwich for `g(u) = ∫|u|^γ`: `Q` is bounded below through the
//! subsolution `ψ⁻¹(λ₁/s) e₁` and, for bounded `f`, above through
//! `s L v` with `v` the torsion function. Both transfer to `λ₀`.

use serde_json::{json, Value};

use crate::error::{AtlasError, Result};
use crate::io::jnum;
use crate::mesh::{Mesh, ScalarField};
use crate::model::{Coefficient, Nonlinearity, NonlocalFunctional};
use crate::numeric::dense_max;
use crate::qmap::QTable;

/// Points per window for the dense scans behind [`BoundsContext::lambda0_bounds`].
pub const SCAN_POINTS: usize = 8192;

#[derive(Debug, Clone)]
pub struct BoundsContext {
    gamma: f64,
    lambda1: f64,
    e1: ScalarField,
    c_e: f64,
    torsion: ScalarField,
    c_v_tor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lambda0Bounds {
    /// Absent when `f` is unbounded.
    pub lower: Option<f64>,
    pub upper: f64,
}

impl Lambda0Bounds {
    pub fn contains(&self, lambda0: f64, slack: f64) -> bool {
        let lo_ok = self.lower.is_none_or(|l| lambda0 >= l * (1.0 - slack) - slack);
        lo_ok && lambda0 <= self.upper * (1.0 + slack) + slack
    }
}

/// Outcome of checking a tabulated `Q` against both bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct SandwichReport {
    pub checked: usize,
    /// `(s, lower, Q, upper)` rows that broke the sandwich.
    pub violations: Vec<(f64, f64, f64, Option<f64>)>,
    /// Smallest `Q/lower` and largest `Q/upper` seen.
    pub lower_ratio: f64,
    pub upper_ratio: Option<f64>,
}

impl SandwichReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

impl BoundsContext {
    pub fn new(mesh: &Mesh, g: &NonlocalFunctional) -> Result<Self> {
        let gamma = g
            .lp_of_u_exponent()
            .ok_or_else(|| AtlasError::invalid(format!("bounds need the int|u|^gamma functional, got {}", g.label())))?;
        let eig = mesh.principal_eigenpair()?;
        let peak = eig.phi1.max();
        let e1 = eig.phi1.scale(1.0 / peak);
        let torsion = mesh.torsion();
        let c_e = mesh.integrate(&e1.map(|x| x.abs().powf(gamma)))?.powf(1.0 / gamma);
        let c_v_tor = mesh.integrate(&torsion.map(|x| x.abs().powf(gamma)))?.powf(1.0 / gamma);
        if !(c_e > 0.0 && c_v_tor > 0.0) {
            return Err(AtlasError::Verification(format!("degenerate bound constants C_e = {c_e}, C_v = {c_v_tor}")));
        }
        Ok(Self {
            gamma,
            lambda1: eig.lambda1,
            e1,
            c_e,
            torsion,
            c_v_tor,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn e1(&self) -> &ScalarField {
        &self.e1
    }

    pub fn c_e(&self) -> f64 {
        self.c_e
    }

    pub fn torsion(&self) -> &ScalarField {
        &self.torsion
    }

    pub fn c_v_tor(&self) -> f64 {
        self.c_v_tor
    }

    /// `ψ⁻¹(λ₁/s)^γ C_e^γ`.
    pub fn q_lower(&self, nl: &Nonlinearity, s: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(AtlasError::invalid(format!("s must be positive, got {s}")));
        }
        let y = self.lambda1 / s;
        if !(y > nl.theta() && y < nl.beta()) {
            return Err(AtlasError::OutOfRange {
                value: s,
                lo: self.lambda1 / nl.beta(),
                hi: if nl.theta() > 0.0 { self.lambda1 / nl.theta() } else { f64::INFINITY },
            });
        }
        Ok((nl.psi_inverse(y)? * self.c_e).powf(self.gamma))
    }

    /// `(s L)^γ C_v^γ`; needs `L = sup f < ∞`.
    pub fn q_upper(&self, nl: &Nonlinearity, s: f64) -> Result<f64> {
        let l = nl
            .sup()
            .ok_or_else(|| AtlasError::invalid(format!("{} is unbounded: no upper bound on Q", nl.label())))?;
        if !(s > 0.0) {
            return Err(AtlasError::invalid(format!("s must be positive, got {s}")));
        }
        Ok((s * l * self.c_v_tor).powf(self.gamma))
    }

    /// `λ₀ ≤ λ₁ max a(α)/ψ(α^{1/γ}/C_e)` and, for bounded `f`,
    /// `λ₀ ≥ max a(α) α^{1/γ} / (L C_v)` over window `i`.
    pub fn lambda0_bounds(&self, nl: &Nonlinearity, coef: &Coefficient, i: usize) -> Result<Lambda0Bounds> {
        let w = coef.window(i)?;
        let inv = 1.0 / self.gamma;
        let (_, upper) = dense_max(
            |a| {
                if a <= 0.0 {
                    return 0.0;
                }
                self.lambda1 * coef.eval(a) / nl.psi(a.powf(inv) / self.c_e)
            },
            w.lo,
            w.hi,
            SCAN_POINTS,
        );
        let lower = nl.sup().map(|l| {
            let (_, m) = dense_max(|a| coef.eval(a) * a.max(0.0).powf(inv), w.lo, w.hi, SCAN_POINTS);
            m / (l * self.c_v_tor)
        });
        Ok(Lambda0Bounds { lower, upper })
    }

    /// Check `lower ≤ Q ≤ upper` on every sample with relative slack.
    pub fn check_table(&self, nl: &Nonlinearity, table: &QTable, slack: f64) -> SandwichReport {
        let mut report = SandwichReport {
            checked: 0,
            violations: Vec::new(),
            lower_ratio: f64::INFINITY,
            upper_ratio: nl.sup().map(|_| 0.0),
        };
        for smp in table.samples() {
            let Ok(lo) = self.q_lower(nl, smp.s) else { continue };
            let hi = self.q_upper(nl, smp.s).ok();
            report.checked += 1;
            if lo > 0.0 {
                report.lower_ratio = report.lower_ratio.min(smp.q / lo);
            }
            if let (Some(r), Some(h)) = (report.upper_ratio.as_mut(), hi) {
                *r = r.max(smp.q / h);
            }
            let below = smp.q < lo * (1.0 - slack);
            let above = hi.is_some_and(|h| smp.q > h * (1.0 + slack));
            if below || above {
                report.violations.push((smp.s, lo, smp.q, hi));
            }
        }
        report
    }

    pub fn to_json(&self) -> Value {
        json!({
            "gamma": jnum(self.gamma),
            "lambda1": jnum(self.lambda1),
            "c_e": jnum(self.c_e),
            "c_v_torsion": jnum(self.c_v_tor),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aux_solver::AuxProblem;
    use crate::mesh::MeshSpec;
    use crate::model::NonlinearityKind;

    fn mesh(n: usize) -> Mesh {
        Mesh::new(&MeshSpec::interval(1.0, n)).unwrap()
    }

    #[test]
    fn constants_on_the_unit_interval() {
        let m = mesh(512);
        let ctx = BoundsContext::new(&m, &NonlocalFunctional::LpOfU { gamma: 1.0 }).unwrap();
        // ∫ sin(πx) = 2/π, ∫ x(1-x)/2 = 1/12
        assert!((ctx.c_e() - 2.0 / std::f64::consts::PI).abs() < 1e-5);
        assert!((ctx.c_v_tor() - 1.0 / 12.0).abs() < 1e-5);
        assert!(ctx.e1().max() <= 1.0);
        assert!(BoundsContext::new(&m, &NonlocalFunctional::LpOfGrad { gamma: 2.0 }).is_err());
    }

    #[test]
    fn sandwich_on_direct_solves() {
        let m = std::sync::Arc::new(mesh(256));
        let ctx = BoundsContext::new(&m, &NonlocalFunctional::LpOfU { gamma: 2.0 }).unwrap();
        let nl = Nonlinearity::new(NonlinearityKind::Saturating { beta0: 2.0 }).unwrap();
        let aux = AuxProblem::new(m.clone(), nl.clone()).unwrap();
        for s in [5.0, 6.0, 10.0, 40.0] {
            let w = aux.solve(s).unwrap().w;
            let q = NonlocalFunctional::LpOfU { gamma: 2.0 }.eval(&m, &w, None).unwrap();
            assert!(ctx.q_lower(&nl, s).unwrap() <= q);
            assert!(q <= ctx.q_upper(&nl, s).unwrap());
        }
        assert!(ctx.q_lower(&nl, 4.0).is_err());
        let power = Nonlinearity::new(NonlinearityKind::Power { p: 1.5 }).unwrap();
        assert!(ctx.q_upper(&power, 1.0).is_err());
    }
}
