//! Fixed points of `P` and reconstruction of the nonlocal solutions.

use super::{Analyzer, EndKind};
use crate::aux_solver::AuxSolution;
use crate::error::{AtlasError, Result};
use crate::numeric::{bisect, golden_max, norm_inf};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub alpha: f64,
    /// `T(λ, α)` at the reported point.
    pub t_value: f64,
    /// Found by `|T|` minimization, not by a sign change.
    pub tangential: bool,
}

/// A solution `u = w_s`, `s = λ/a(α)`, of the nonlocal problem.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub lambda: f64,
    /// `α*` after polishing with direct solves.
    pub alpha: f64,
    pub alpha_input: f64,
    pub s: f64,
    pub g_value: f64,
    pub g_residual: f64,
    /// `‖-a(g(u))Δu - λ f(u)‖∞ / ‖λ f(u)‖∞`.
    pub pde_residual: f64,
    pub solution: AuxSolution,
}

impl Analyzer {
    /// Sign-change scan of `T(λ, ·)` on every admissible interval with
    /// bisection, plus `|T|` minimization for touching zeros. Coercive ends
    /// count as `T = +∞`, vanishing ends as `T = -α`.
    pub fn find_fixed_points(&self, i: usize, lambda: f64) -> Result<Vec<FixedPoint>> {
        let set = self.admissible_set(i, lambda)?;
        let n = self.opts.fixed_point_scan.max(16);
        let mut found: Vec<FixedPoint> = Vec::new();
        for iv in &set.intervals {
            let h = (iv.hi - iv.lo) / n as f64;
            let xs: Vec<f64> = (0..=n).map(|k| if k == n { iv.hi } else { iv.lo + h * k as f64 }).collect();
            let ts: Vec<f64> = xs
                .iter()
                .enumerate()
                .map(|(k, &x)| {
                    let end = if k == 0 {
                        Some(iv.left)
                    } else if k == n {
                        Some(iv.right)
                    } else {
                        None
                    };
                    match end {
                        Some(EndKind::Vanishing) => -x,
                        Some(EndKind::Coercive) => f64::INFINITY,
                        None => self.t_value(lambda, x),
                    }
                })
                .collect();
            let t_fn = |x: f64| self.t_value(lambda, x).min(f64::MAX);
            for k in 0..n {
                let (a, b) = (ts[k], ts[k + 1]);
                if a == 0.0 && k > 0 {
                    found.push(FixedPoint {
                        alpha: xs[k],
                        t_value: 0.0,
                        tangential: false,
                    });
                    continue;
                }
                if (a < 0.0) != (b < 0.0) && b != 0.0 {
                    let (lo, hi) = bisect(t_fn, xs[k], xs[k + 1], 1e-15 * (1.0 + xs[k].abs()));
                    let alpha = 0.5 * (lo + hi);
                    found.push(FixedPoint {
                        alpha,
                        t_value: self.t_value(lambda, alpha),
                        tangential: false,
                    });
                }
            }
            for k in 1..n {
                let (l, m, r) = (ts[k - 1], ts[k], ts[k + 1]);
                let same_sign = (l < 0.0) == (m < 0.0) && (m < 0.0) == (r < 0.0);
                let tol = self.opts.tol_t * (1.0 + xs[k].abs());
                if !same_sign || m.abs() > l.abs() || m.abs() > r.abs() || m.abs() > 1e3 * tol.max(1e-6) {
                    continue;
                }
                let (x, v) = golden_max(|x| -t_fn(x).abs(), xs[k - 1], xs[k + 1], 1e-14 * (1.0 + xs[k].abs()));
                if -v <= tol {
                    found.push(FixedPoint {
                        alpha: x,
                        t_value: self.t_value(lambda, x),
                        tangential: true,
                    });
                }
            }
        }
        found.sort_by(|a, b| a.alpha.partial_cmp(&b.alpha).expect("finite"));
        found.dedup_by(|b, a| (b.alpha - a.alpha).abs() <= 1e-9 * (1.0 + a.alpha.abs()));
        Ok(found)
    }

    /// Solve the auxiliary problem at `s = λ/a(α*)` and check that `w_s`
    /// solves the nonlocal problem. `α*` is first polished by secant steps on
    /// the exact map `α ↦ g(w_{λ/a(α)}) - α` within `polish_radius`; a
    /// larger correction means the fixed point was misplaced.
    pub fn reconstruct_solution(&self, lambda: f64, alpha_star: f64) -> Result<Reconstruction> {
        let phi = |alpha: f64| -> Result<(f64, AuxSolution)> {
            let a = self.coef.eval(alpha);
            let (q, sol) = self.map.eval(lambda / a)?;
            Ok((q - alpha, sol))
        };
        let radius = self.opts.polish_radius * (1.0 + alpha_star.abs());
        let tight = 1e-13 * (1.0 + alpha_star.abs());
        let (mut x0, (mut f0, mut sol0)) = (alpha_star, phi(alpha_star)?);
        let initial = f0.abs();
        if initial > tight {
            let mut x1 = alpha_star + 1e-7 * (1.0 + alpha_star.abs());
            let (mut f1, mut sol1) = phi(x1)?;
            for _ in 0..40 {
                if f1.abs() <= tight || f1 == f0 {
                    break;
                }
                let x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
                if !((x2 - alpha_star).abs() <= radius) {
                    return Err(AtlasError::GMismatch {
                        alpha: alpha_star,
                        mismatch: initial,
                    });
                }
                let (f2, sol2) = phi(x2)?;
                (x0, f0, sol0) = (x1, f1, sol1);
                (x1, f1, sol1) = (x2, f2, sol2);
                if (x1 - x0).abs() <= 1e-15 * (1.0 + x1.abs()) {
                    break;
                }
            }
            if f1.abs() < f0.abs() {
                (x0, f0, sol0) = (x1, f1, sol1);
            }
        }
        let alpha = x0;
        let g_residual = f0.abs();
        if g_residual > self.opts.tol_g * (1.0 + alpha) {
            return Err(AtlasError::GMismatch {
                alpha: alpha_star,
                mismatch: g_residual,
            });
        }
        let g_value = alpha + f0;
        let pde_residual = self.nonlocal_residual(lambda, &sol0, g_value);
        Ok(Reconstruction {
            lambda,
            alpha,
            alpha_input: alpha_star,
            s: sol0.s,
            g_value,
            g_residual,
            pde_residual,
            solution: sol0,
        })
    }

    /// `‖-a(g)Δ_h u - λ f(u)‖∞ / ‖λ f(u)‖∞` with the mesh Laplacian.
    pub fn nonlocal_residual(&self, lambda: f64, sol: &AuxSolution, g_value: f64) -> f64 {
        let mesh = self.map.aux().mesh();
        let nl = self.map.aux().nonlinearity();
        let u = sol.w.values();
        let au = mesh.neg_laplacian(u);
        let a = self.coef.eval(g_value);
        let rhs: Vec<f64> = u.iter().map(|&x| lambda * nl.f(x)).collect();
        let r = au
            .iter()
            .zip(&rhs)
            .fold(0.0f64, |m, (lap, f)| m.max((a * lap - f).abs()));
        r / norm_inf(&rhs)
    }

    /// Feed `α' = g(u)` back through the pipeline: relative sup distance
    /// between `u` and the auxiliary solution at `λ/a(α')`.
    pub fn reentry_gap(&self, rec: &Reconstruction) -> Result<f64> {
        let s = rec.lambda / self.coef.eval(rec.g_value);
        let (_, sol) = self.map.eval(s)?;
        Ok(sol.w.dist_inf(&rec.solution.w) / rec.solution.w.norm_inf())
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::analyzer;
    use crate::model::{CoefficientKind, NonlinearityKind, NonlocalFunctional};

    #[test]
    fn two_fixed_points_below_threshold_none_above() {
        let an = analyzer(
            NonlinearityKind::Power { p: 1.5 },
            NonlocalFunctional::LpOfU { gamma: 1.0 },
            CoefficientKind::AbsSin,
            1,
        );
        let th = an.thresholds(0).unwrap();
        let l0 = th.lambda0.unwrap();
        let fps = an.find_fixed_points(0, 0.5 * l0).unwrap();
        assert!(fps.len() >= 2, "{fps:?}");
        for fp in &fps {
            let rec = an.reconstruct_solution(0.5 * l0, fp.alpha).unwrap();
            assert!(rec.g_residual <= 1e-6 * (1.0 + rec.alpha));
            assert!(rec.pde_residual <= 1e-6, "{}", rec.pde_residual);
            assert!(an.reentry_gap(&rec).unwrap() <= 1e-9);
        }
        assert!(an.find_fixed_points(0, 1.05 * th.lambda0_tilde.unwrap()).unwrap().is_empty());
        // at the sharp threshold the fixed point is a touching zero
        let (sharp, argmax) = th.sharp.unwrap();
        let at = an.find_fixed_points(0, sharp).unwrap();
        assert!(!at.is_empty());
        assert!(at.iter().any(|fp| (fp.alpha - argmax).abs() < 1e-3));
    }

    #[test]
    fn misplaced_fixed_point_is_rejected() {
        let an = analyzer(
            NonlinearityKind::Saturating { beta0: 5.0 },
            NonlocalFunctional::LpOfU { gamma: 2.0 },
            CoefficientKind::AbsSin,
            1,
        );
        let l0 = an.thresholds(0).unwrap().lambda0.unwrap();
        let fps = an.find_fixed_points(0, 0.5 * l0).unwrap();
        assert!(fps.len() >= 2);
        let err = an.reconstruct_solution(0.5 * l0, fps[0].alpha * 1.01);
        assert!(matches!(err, Err(crate::error::AtlasError::GMismatch { .. })));
    }
}
