//! The auxiliary problem `-Δw = s f(w)`, `w > 0`, `w = 0` on the boundary.
//!
//! The positive solution is computed twice: once upward from the subsolution
//! `η_s φ₁` and once downward from a supersolution built on the torsion
//! function. Both passes run the order-preserving iteration
//! `w ← (-Δ)⁻¹ s f(w)` and switch to Newton once the Jacobian
//! `-Δ - s f'(w)` factors as positive definite. Agreement of the two limits is
//! the discrete witness of uniqueness.

use std::sync::Arc;

use crate::error::{AtlasError, Result};
use crate::mesh::{EigenPair, Mesh, ScalarField};
use crate::model::Nonlinearity;
use crate::numeric::{dist_inf, norm_inf};

/// Open interval `(λ₁/β, λ₁/θ)` with `λ₁/∞ = 0` and `λ₁/0 = ∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SRange {
    pub lo: f64,
    pub hi: f64,
}

impl SRange {
    pub fn contains(&self, s: f64) -> bool {
        s > self.lo && s < self.hi
    }

    /// `s` clears both endpoints by the relative `margin`.
    pub fn contains_with_margin(&self, s: f64, margin: f64) -> bool {
        s > self.lo * (1.0 + margin) && s > 0.0 && (self.hi.is_infinite() || s < self.hi * (1.0 - margin))
    }
}

pub fn admissible_s_range(nl: &Nonlinearity, lambda1: f64) -> SRange {
    let lo = if nl.beta().is_infinite() { 0.0 } else { lambda1 / nl.beta() };
    let hi = if nl.theta() == 0.0 { f64::INFINITY } else { lambda1 / nl.theta() };
    SRange { lo, hi }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuxOptions {
    /// Fixed-point tolerance, relative to `‖w‖∞`.
    pub tol_fp: f64,
    /// Residual tolerance relative to `‖s f(w)‖∞`.
    pub tol_pde: f64,
    pub max_iters: usize,
    /// Picard steps between Newton attempts.
    pub picard_budget: usize,
    /// Relative distance `s` must keep from the ends of the admissible range.
    pub margin: f64,
    /// Run the downward pass and compare.
    pub verify_uniqueness: bool,
}

impl Default for AuxOptions {
    fn default() -> Self {
        Self {
            tol_fp: 1e-10,
            tol_pde: 1e-9,
            max_iters: 50_000,
            picard_budget: 200,
            margin: 1e-8,
            verify_uniqueness: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AuxSolution {
    pub s: f64,
    pub w: ScalarField,
    /// `-Δw`, known exactly as `s f(w)`.
    pub neg_laplacian: ScalarField,
    pub residual_inf: f64,
    pub energy: f64,
    /// Iterations of the upward and downward passes.
    pub iterations: (usize, usize),
    /// Subsolution level `η_s = ψ⁻¹(λ₁/s)`.
    pub eta: f64,
    /// Supersolution `M (v + κ φ₁)`.
    pub super_scale: f64,
    pub super_kappa: f64,
    pub uniqueness_gap: f64,
}

/// Mesh, nonlinearity and the spectral data reused by every solve.
#[derive(Debug, Clone)]
pub struct AuxProblem {
    mesh: Arc<Mesh>,
    nl: Nonlinearity,
    eig: Arc<EigenPair>,
    torsion: Arc<ScalarField>,
    opts: AuxOptions,
}

impl AuxProblem {
    pub fn new(mesh: Arc<Mesh>, nl: Nonlinearity) -> Result<Self> {
        let eig = Arc::new(mesh.principal_eigenpair()?);
        Ok(Self::with_eigenpair(mesh, nl, eig))
    }

    pub fn with_eigenpair(mesh: Arc<Mesh>, nl: Nonlinearity, eig: Arc<EigenPair>) -> Self {
        let torsion = Arc::new(mesh.torsion());
        Self {
            mesh,
            nl,
            eig,
            torsion,
            opts: AuxOptions::default(),
        }
    }

    pub fn with_options(mut self, opts: AuxOptions) -> Self {
        self.opts = opts;
        self
    }

    pub fn options(&self) -> &AuxOptions {
        &self.opts
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nl
    }

    pub fn eigenpair(&self) -> &Arc<EigenPair> {
        &self.eig
    }

    pub fn lambda1(&self) -> f64 {
        self.eig.lambda1
    }

    pub fn torsion(&self) -> &ScalarField {
        &self.torsion
    }

    pub fn s_range(&self) -> SRange {
        admissible_s_range(&self.nl, self.eig.lambda1)
    }

    /// Subsolution `z_s = ψ⁻¹(λ₁/s) φ₁`.
    pub fn subsolution(&self, s: f64) -> Result<(f64, ScalarField)> {
        let eta = self.nl.psi_inverse(self.eig.lambda1 / s)?;
        Ok((eta, self.eig.phi1.scale(eta)))
    }

    /// Supersolution `M (v + κ φ₁)` verified node by node. `κ` absorbs the
    /// linear growth `θ t` of `f`; `M` doubles until the inequality holds.
    pub fn supersolution(&self, s: f64) -> Result<(f64, f64, ScalarField)> {
        let lambda1 = self.eig.lambda1;
        let v = self.torsion.values();
        let phi = self.eig.phi1.values();
        let st = s * self.nl.theta();
        let kappa = if st > 0.0 {
            let need = v
                .iter()
                .zip(phi)
                .map(|(&vv, &pp)| (st * vv - 1.0) / ((lambda1 - st) * pp))
                .fold(0.0f64, f64::max);
            if need > 0.0 {
                1.25 * need + 1e-3
            } else {
                0.0
            }
        } else {
            0.0
        };
        let base: Vec<f64> = v.iter().zip(phi).map(|(&a, &b)| a + kappa * b).collect();
        let lap_base = self.mesh.neg_laplacian(&base);
        let mut m = match self.nl.sup() {
            Some(l) if kappa == 0.0 => s * l,
            _ => 1.0,
        };
        for _ in 0..=60 {
            let ok = base
                .iter()
                .zip(&lap_base)
                .all(|(&b, &lb)| m * lb >= s * self.nl.f(m * b));
            if ok {
                let field = ScalarField::from_vec(base.iter().map(|b| m * b).collect());
                return Ok((m, kappa, field));
            }
            m *= 2.0;
        }
        Err(AtlasError::BracketFailure { s, doublings: 60 })
    }

    pub fn solve(&self, s: f64) -> Result<AuxSolution> {
        let range = self.s_range();
        if !range.contains_with_margin(s, self.opts.margin) {
            return Err(AtlasError::OutOfRange {
                value: s,
                lo: range.lo,
                hi: range.hi,
            });
        }
        let (eta, sub) = self.subsolution(s)?;
        let (w, up_iters) = self.iterate(s, sub.into_vec())?;
        let w = self.polish(s, w);
        let (mut super_scale, mut super_kappa, mut gap, mut down_iters) = (f64::NAN, f64::NAN, 0.0, 0);
        if self.opts.verify_uniqueness {
            let (m, kappa, sup) = self.supersolution(s)?;
            let (wd, it) = self.iterate(s, sup.into_vec())?;
            let wd = self.polish(s, wd);
            gap = dist_inf(&w, &wd);
            super_scale = m;
            super_kappa = kappa;
            down_iters = it;
            if gap > 10.0 * self.tol(&w) + self.rounding_floor(s, &w) {
                return Err(AtlasError::UniquenessViolation { s, gap });
            }
        }
        if w.iter().any(|&x| !(x > 0.0)) {
            return Err(AtlasError::Verification(format!("auxiliary solution not positive at s = {s}")));
        }
        let rhs: Vec<f64> = w.iter().map(|&x| s * self.nl.f(x)).collect();
        let w = ScalarField::from_vec(w);
        let residual_inf = self.residual(s, &w)?;
        let bound = self.opts.tol_pde * norm_inf(&rhs) + 1e-12;
        if residual_inf > bound {
            return Err(AtlasError::NonConvergence {
                what: "auxiliary residual check",
                iterations: up_iters,
                last_change: residual_inf,
            });
        }
        let energy = self.energy(s, &w)?;
        Ok(AuxSolution {
            s,
            w,
            neg_laplacian: ScalarField::from_vec(rhs),
            residual_inf,
            energy,
            iterations: (up_iters, down_iters),
            eta,
            super_scale,
            super_kappa,
            uniqueness_gap: gap,
        })
    }

    /// Accuracy attainable in floating point: `ε ‖A‖/λ₁` times a
    /// conditioning factor that blows up as `s` nears either end of the
    /// range, where the linearization becomes singular.
    fn rounding_floor(&self, s: f64, w: &[f64]) -> f64 {
        let l1 = self.lambda1();
        let norm_a: f64 = self.mesh.spacing().iter().map(|h| 4.0 / (h * h)).sum();
        let mut kappa = 1.0;
        if self.nl.beta().is_finite() {
            kappa += l1 / (s * self.nl.beta() - l1).abs();
        }
        if self.nl.theta() > 0.0 {
            kappa += l1 / (l1 - s * self.nl.theta()).abs();
        }
        f64::EPSILON * norm_a / l1 * kappa * norm_inf(w)
    }

    /// A few Newton steps past the stopping rule, kept only while they
    /// reduce the residual, so both passes end at rounding level.
    fn polish(&self, s: f64, mut w: Vec<f64>) -> Vec<f64> {
        let res = |w: &[f64]| -> f64 {
            let aw = self.mesh.neg_laplacian(w);
            aw.iter().zip(w).fold(0.0f64, |m, (a, &x)| m.max((a - s * self.nl.f(x)).abs()))
        };
        let mut r0 = res(&w);
        for _ in 0..4 {
            let mut jac = self.mesh.laplacian_matrix().clone();
            let diag: Vec<f64> = w.iter().map(|&x| -s * self.nl.df(x)).collect();
            jac.add_diagonal(&diag);
            let Ok(chol) = jac.cholesky() else { break };
            let aw = self.mesh.neg_laplacian(&w);
            let r: Vec<f64> = aw.iter().zip(&w).map(|(a, &x)| a - s * self.nl.f(x)).collect();
            let delta = chol.solve(&r);
            let next: Vec<f64> = w.iter().zip(&delta).map(|(x, d)| x - d).collect();
            if next.iter().any(|&x| !(x > 0.0)) {
                break;
            }
            let r1 = res(&next);
            if !(r1 < r0) {
                break;
            }
            let small = norm_inf(&delta) <= 4.0 * f64::EPSILON * norm_inf(&next);
            w = next;
            r0 = r1;
            if small {
                break;
            }
        }
        w
    }

    fn tol(&self, w: &[f64]) -> f64 {
        self.opts.tol_fp * norm_inf(w).max(f64::MIN_POSITIVE)
    }

    /// Picard sweeps with periodic Newton attempts. Picard is stopped on the
    /// change scaled by `1/(1-ρ)` with the observed contraction `ρ`, since a
    /// small step alone says little when `ρ` is close to one.
    fn iterate(&self, s: f64, mut w: Vec<f64>) -> Result<(Vec<f64>, usize)> {
        let mut iters = 0usize;
        let mut last = f64::INFINITY;
        while iters < self.opts.max_iters {
            let mut prev_d = f64::INFINITY;
            for _ in 0..self.opts.picard_budget {
                let rhs: Vec<f64> = w.iter().map(|&x| s * self.nl.f(x)).collect();
                let next = self.mesh.solve_raw(&rhs);
                let d = dist_inf(&next, &w);
                w = next;
                iters += 1;
                last = d;
                let rho = if prev_d.is_finite() && prev_d > 0.0 {
                    (d / prev_d).clamp(0.0, 0.999_999)
                } else {
                    0.999_999
                };
                prev_d = d;
                if d / (1.0 - rho) <= self.tol(&w) {
                    return Ok((w, iters));
                }
            }
            if let Some(done) = self.newton(s, &w, &mut iters) {
                return Ok((done, iters));
            }
        }
        Err(AtlasError::NonConvergence {
            what: "auxiliary monotone iteration",
            iterations: iters,
            last_change: last,
        })
    }

    /// Newton on `-Δw - s f(w) = 0`; `None` when the Jacobian is not
    /// positive definite or an iterate leaves the positive cone.
    fn newton(&self, s: f64, start: &[f64], iters: &mut usize) -> Option<Vec<f64>> {
        let mut w = start.to_vec();
        for _ in 0..60 {
            let mut jac = self.mesh.laplacian_matrix().clone();
            let diag: Vec<f64> = w.iter().map(|&x| -s * self.nl.df(x)).collect();
            jac.add_diagonal(&diag);
            let chol = jac.cholesky().ok()?;
            let aw = self.mesh.neg_laplacian(&w);
            let r: Vec<f64> = aw.iter().zip(&w).map(|(a, &x)| a - s * self.nl.f(x)).collect();
            let delta = chol.solve(&r);
            let next: Vec<f64> = w.iter().zip(&delta).map(|(x, d)| x - d).collect();
            *iters += 1;
            if next.iter().any(|&x| !(x > 0.0)) {
                return None;
            }
            let d = norm_inf(&delta);
            w = next;
            if d <= self.tol(&w) {
                return Some(w);
            }
        }
        None
    }

    /// `Φ_s(u) = ½∫|∇u|² - s∫F(u)`.
    pub fn energy(&self, s: f64, u: &ScalarField) -> Result<f64> {
        energy(&self.mesh, &self.nl, s, u)
    }

    /// `‖-Δu - s f(u)‖∞`.
    pub fn residual(&self, s: f64, u: &ScalarField) -> Result<f64> {
        residual(&self.mesh, &self.nl, s, u)
    }
}

/// `Φ_s(u) = ½∫|∇u|² - s∫F(u)`.
pub fn energy(mesh: &Mesh, nl: &Nonlinearity, s: f64, u: &ScalarField) -> Result<f64> {
    let grad = mesh.dirichlet_energy(u)?;
    let big_f: Vec<f64> = u.values().iter().map(|&x| nl.antiderivative(x)).collect();
    Ok(0.5 * grad - s * mesh.integrate_raw(&big_f))
}

/// `‖-Δu - s f(u)‖∞`.
pub fn residual(mesh: &Mesh, nl: &Nonlinearity, s: f64, u: &ScalarField) -> Result<f64> {
    mesh.check(u)?;
    let au = mesh.neg_laplacian(u.values());
    Ok(au
        .iter()
        .zip(u.values())
        .fold(0.0f64, |m, (a, &x)| m.max((a - s * nl.f(x)).abs())))
}
