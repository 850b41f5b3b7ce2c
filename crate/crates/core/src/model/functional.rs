//! Nonlocal functionals `g` of the solution, its gradient or its Laplacian.

use serde::{Deserialize, Serialize};

use crate::error::{AtlasError, Result};
use crate::mesh::{Mesh, ScalarField};

/// Outer composition `φ` with `φ(0) = 0` and `φ(t) → ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Phi {
    Power { q: f64 },
    /// `ln(1 + t)`
    Log1p,
    /// `ln(1 + ln(1 + t))`
    LogLog1p,
    /// `t ln(1 + t)`
    TLog1p,
}

impl Phi {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Phi::Power { q } => t.powf(q),
            Phi::Log1p => t.ln_1p(),
            Phi::LogLog1p => t.ln_1p().ln_1p(),
            Phi::TLog1p => t * t.ln_1p(),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Phi::Power { q } if !(q > 0.0) || !q.is_finite() => {
                Err(AtlasError::invalid(format!("phi power needs q > 0, got {q}")))
            }
            _ => Ok(()),
        }
    }

    fn degree(&self) -> Option<f64> {
        match *self {
            Phi::Power { q } => Some(q),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NonlocalFunctional {
    /// `∫ |u|^γ`
    LpOfU { gamma: f64 },
    /// `∫ |∇u|^γ`
    LpOfGrad { gamma: f64 },
    /// `∫ |Δu|^γ`, evaluated from a supplied `-Δu`.
    LpOfLaplacian { gamma: f64 },
    /// `φ(‖u‖_{L^γ})`
    PhiOfNorm { gamma: f64, phi: Phi },
    /// `∫ φ(|u|)`
    IntegralPhiOfU { phi: Phi },
    /// `∫ φ(|∇u|)`
    IntegralPhiOfGrad { phi: Phi },
}

impl NonlocalFunctional {
    /// Validate parameters and return the functional.
    pub fn new(self) -> Result<Self> {
        match self {
            NonlocalFunctional::LpOfU { gamma }
            | NonlocalFunctional::LpOfGrad { gamma }
            | NonlocalFunctional::LpOfLaplacian { gamma } => check_gamma(gamma)?,
            NonlocalFunctional::PhiOfNorm { gamma, phi } => {
                check_gamma(gamma)?;
                phi.validate()?;
            }
            NonlocalFunctional::IntegralPhiOfU { phi } | NonlocalFunctional::IntegralPhiOfGrad { phi } => {
                phi.validate()?
            }
        }
        Ok(self)
    }

    /// Degree `d` with `g(tu) = t^d g(u)`, when it exists.
    pub fn homogeneity(&self) -> Option<f64> {
        match *self {
            NonlocalFunctional::LpOfU { gamma }
            | NonlocalFunctional::LpOfGrad { gamma }
            | NonlocalFunctional::LpOfLaplacian { gamma } => Some(gamma),
            NonlocalFunctional::PhiOfNorm { phi, .. }
            | NonlocalFunctional::IntegralPhiOfU { phi }
            | NonlocalFunctional::IntegralPhiOfGrad { phi } => phi.degree(),
        }
    }

    /// `γ` of the plain `∫|u|^γ` kind, the scope of the analytic bounds.
    pub fn lp_of_u_exponent(&self) -> Option<f64> {
        match *self {
            NonlocalFunctional::LpOfU { gamma } => Some(gamma),
            _ => None,
        }
    }

    pub fn uses_gradient(&self) -> bool {
        matches!(
            self,
            NonlocalFunctional::LpOfGrad { .. } | NonlocalFunctional::IntegralPhiOfGrad { .. }
        )
    }

    pub fn needs_laplacian(&self) -> bool {
        matches!(self, NonlocalFunctional::LpOfLaplacian { .. })
    }

    /// `g(u)`. `neg_laplacian` is `-Δu`, required for the Laplacian kind.
    pub fn eval(&self, mesh: &Mesh, u: &ScalarField, neg_laplacian: Option<&ScalarField>) -> Result<f64> {
        mesh.check(u)?;
        let v = u.values();
        Ok(match *self {
            NonlocalFunctional::LpOfU { gamma } => mesh.integrate_raw(&abs_pow(v, gamma)),
            NonlocalFunctional::LpOfGrad { gamma } => mesh.integrate_gradient(u, |t| t.powf(gamma))?,
            NonlocalFunctional::LpOfLaplacian { gamma } => {
                let lap = neg_laplacian.ok_or(AtlasError::MissingLaplacian)?;
                mesh.check(lap)?;
                mesh.integrate_raw(&abs_pow(lap.values(), gamma))
            }
            NonlocalFunctional::PhiOfNorm { gamma, phi } => {
                phi.eval(mesh.integrate_raw(&abs_pow(v, gamma)).powf(1.0 / gamma))
            }
            NonlocalFunctional::IntegralPhiOfU { phi } => {
                let w: Vec<f64> = v.iter().map(|x| phi.eval(x.abs())).collect();
                mesh.integrate_raw(&w)
            }
            NonlocalFunctional::IntegralPhiOfGrad { phi } => mesh.integrate_gradient(u, |t| phi.eval(t))?,
        })
    }

    pub fn label(&self) -> String {
        match self {
            NonlocalFunctional::LpOfU { gamma } => format!("int|u|^{gamma}"),
            NonlocalFunctional::LpOfGrad { gamma } => format!("int|grad u|^{gamma}"),
            NonlocalFunctional::LpOfLaplacian { gamma } => format!("int|lap u|^{gamma}"),
            NonlocalFunctional::PhiOfNorm { gamma, phi } => format!("phi(|u|_{gamma}) with {phi:?}"),
            NonlocalFunctional::IntegralPhiOfU { phi } => format!("int phi(|u|) with {phi:?}"),
            NonlocalFunctional::IntegralPhiOfGrad { phi } => format!("int phi(|grad u|) with {phi:?}"),
        }
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma >= 1.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(AtlasError::invalid(format!("functional exponent must satisfy gamma >= 1, got {gamma}")))
    }
}

fn abs_pow(v: &[f64], gamma: f64) -> Vec<f64> {
    if gamma == 1.0 {
        v.iter().map(|x| x.abs()).collect()
    } else if gamma == 2.0 {
        v.iter().map(|x| x * x).collect()
    } else {
        v.iter().map(|x| x.abs().powf(gamma)).collect()
    }
}
