//! Fixed-point engine: `P(α) = Q(λ/a(α))`, `T(λ, α) = P(α) - α`,
//! `c(λ) = inf T(λ, ·)` and the thresholds `λ₀ ≤ λ̃₀` per window.

pub mod admissible;
mod fixed_points;
mod oscillation;

use std::sync::Arc;

use rayon::prelude::*;

pub use admissible::{admissible_set, AdmissibleInterval, AdmissibleSet, EndKind, IntervalType};
pub use fixed_points::{FixedPoint, Reconstruction};
pub use oscillation::OscillationReport;

use crate::error::{AtlasError, Result};
use crate::model::{Coefficient, Window};
use crate::numeric::{bisect, dense_max, geomspace, golden_max};
use crate::qmap::{tabulate_q, QMap, QTable, SamplingSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzerOptions {
    /// Grid points per window for the level-crossing scan and for `c(λ)`.
    pub scan_points: usize,
    /// Grid points per admissible interval for the fixed-point scan.
    pub fixed_point_scan: usize,
    /// Points of the geometric `λ` grid used to bracket thresholds.
    pub lambda_grid: usize,
    /// Samples of `H = a Q⁻¹` for the oscillation count.
    pub oscillation_samples: usize,
    /// Tangential fixed points need `|T| ≤ tol_t (1 + α)`.
    pub tol_t: f64,
    /// `|g(u) - α*| ≤ tol_g (1 + α*)` for reconstructed solutions.
    pub tol_g: f64,
    /// Nonlocal residual relative to `‖λ f(u)‖∞`.
    pub tol_pde: f64,
    /// Largest relative move of `α*` allowed while polishing with direct
    /// solves.
    pub polish_radius: f64,
    pub sampling: SamplingSpec,
}

impl Default for AnalyzerOptions {
    fn default() -> Self {
        Self {
            scan_points: 4096,
            fixed_point_scan: 8192,
            lambda_grid: 128,
            oscillation_samples: 16384,
            tol_t: 1e-9,
            tol_g: 1e-6,
            tol_pde: 1e-6,
            polish_radius: 1e-4,
            sampling: SamplingSpec::default(),
        }
    }
}

/// `λ₀` and `λ̃₀` of one window.
#[derive(Debug, Clone, PartialEq)]
pub struct Thresholds {
    pub window: usize,
    pub lambda0: Option<f64>,
    pub lambda0_bracket: Option<(f64, f64)>,
    pub lambda0_tilde: Option<f64>,
    pub lambda0_tilde_bracket: Option<(f64, f64)>,
    /// `max a(α) Q⁻¹(α)` and its argmax, for monotone tables.
    pub sharp: Option<(f64, f64)>,
    /// `(λ, c(λ))` on the scan grid.
    pub c_curve: Vec<(f64, f64)>,
    pub note: Option<String>,
}

/// Everything the fixed-point analysis needs, immutable once built.
#[derive(Debug, Clone)]
pub struct Analyzer {
    map: QMap,
    table: Arc<QTable>,
    coef: Coefficient,
    opts: AnalyzerOptions,
}

impl Analyzer {
    /// Tabulates `Q` down to `1e-4 t₁` and up to `1.5 t_k`.
    pub fn new(map: QMap, coef: Coefficient, opts: AnalyzerOptions) -> Result<Self> {
        let zeros = coef.zeros();
        let mut spec = opts.sampling.clone();
        spec.q_floor = spec.q_floor.or(Some(1e-4 * zeros[1]));
        spec.q_ceiling = spec.q_ceiling.or(Some(1.5 * zeros[zeros.len() - 1]));
        let table = Arc::new(tabulate_q(&map, &spec)?);
        Ok(Self::with_table(map, table, coef, opts))
    }

    pub fn with_table(map: QMap, table: Arc<QTable>, coef: Coefficient, opts: AnalyzerOptions) -> Self {
        Self { map, table, coef, opts }
    }

    pub fn map(&self) -> &QMap {
        &self.map
    }

    pub fn table(&self) -> &Arc<QTable> {
        &self.table
    }

    pub fn coefficient(&self) -> &Coefficient {
        &self.coef
    }

    pub fn options(&self) -> &AnalyzerOptions {
        &self.opts
    }

    pub fn lambda1(&self) -> f64 {
        self.map.aux().lambda1()
    }

    pub fn window(&self, i: usize) -> Result<Window> {
        self.coef.window(i).copied()
    }

    /// `A_i λ₁/θ` (`∞` when `θ = 0`): no admissible `α` above it.
    pub fn lambda_cap(&self, i: usize) -> Result<f64> {
        let theta = self.map.aux().nonlinearity().theta();
        let a = self.window(i)?.max_value;
        Ok(if theta == 0.0 { f64::INFINITY } else { a * self.lambda1() / theta })
    }

    pub fn admissible_set(&self, i: usize, lambda: f64) -> Result<AdmissibleSet> {
        self.window(i)?;
        Ok(admissible_set(
            &self.coef,
            i,
            lambda,
            self.map.aux().nonlinearity(),
            self.lambda1(),
            self.opts.scan_points,
        ))
    }

    /// `P(α)` without membership checks: `0` where `λ/a(α)` is at or below
    /// `λ₁/β`, `∞` where it reaches `λ₁/θ` or `a(α) = 0`.
    pub fn p_raw(&self, lambda: f64, alpha: f64) -> f64 {
        let a = self.coef.eval(alpha);
        if !(a > 0.0) {
            return f64::INFINITY;
        }
        let s = lambda / a;
        let r = self.table.range();
        if s <= r.lo {
            0.0
        } else if s >= r.hi {
            f64::INFINITY
        } else {
            self.table.q_eval_extended(s)
        }
    }

    /// `P(α)` for `α` in the extended admissible set of window `i`.
    pub fn p_eval(&self, i: usize, lambda: f64, alpha: f64) -> Result<f64> {
        let set = self.admissible_set(i, lambda)?;
        let iv = set.locate(alpha).ok_or_else(|| {
            AtlasError::invalid(format!("alpha = {alpha} is outside the extended admissible set"))
        })?;
        let at_vanishing = (alpha == iv.lo && iv.left == EndKind::Vanishing)
            || (alpha == iv.hi && iv.right == EndKind::Vanishing);
        Ok(if at_vanishing { 0.0 } else { self.p_raw(lambda, alpha) })
    }

    /// `T(λ, α) = P(α) - α`.
    pub fn t_value(&self, lambda: f64, alpha: f64) -> f64 {
        self.p_raw(lambda, alpha) - alpha
    }

    /// `(c(λ), argmin)`; `(∞, NaN)` when the admissible set is empty.
    pub fn c_of_lambda(&self, i: usize, lambda: f64) -> Result<(f64, f64)> {
        let set = self.admissible_set(i, lambda)?;
        Ok(self.c_on_set(&set))
    }

    fn c_on_set(&self, set: &AdmissibleSet) -> (f64, f64) {
        let lambda = set.lambda;
        let mut best = (f64::INFINITY, f64::NAN);
        let n = self.opts.scan_points.max(16);
        for iv in &set.intervals {
            let h = (iv.hi - iv.lo) / n as f64;
            let t_at = |k: usize| -> (f64, f64) {
                let x = if k == n { iv.hi } else { iv.lo + h * k as f64 };
                let t = match (k, k == n) {
                    (0, _) if iv.left == EndKind::Vanishing => -x,
                    (0, _) => f64::INFINITY,
                    (_, true) if iv.right == EndKind::Vanishing => -x,
                    (_, true) => f64::INFINITY,
                    _ => self.t_value(lambda, x),
                };
                (x, t)
            };
            let mut local = (f64::INFINITY, f64::NAN, 0usize);
            for k in 0..=n {
                let (x, t) = t_at(k);
                if t < local.0 {
                    local = (t, x, k);
                }
            }
            let k = local.2;
            if k > 0 && k < n {
                let (xr, vr) = golden_max(
                    |x| -self.t_value(lambda, x),
                    iv.lo + h * (k - 1) as f64,
                    iv.lo + h * (k + 1) as f64,
                    1e-13 * (1.0 + local.1.abs()),
                );
                if -vr < local.0 {
                    local = (-vr, xr, k);
                }
            }
            if local.0 < best.0 {
                best = (local.0, local.1);
            }
        }
        best
    }

    /// `H(α) = a(α) Q⁻¹(α)` with the table's log-linear continuation.
    pub fn h_value(&self, alpha: f64) -> Result<f64> {
        let a = self.coef.eval(alpha);
        if a == 0.0 || alpha <= 0.0 {
            return Ok(0.0);
        }
        Ok(a * self.table.q_inverse_extended(alpha)?)
    }

    /// `max_{window} a(α) Q⁻¹(α)` and its argmax (monotone tables only).
    pub fn sharp_threshold(&self, i: usize) -> Result<(f64, f64)> {
        let w = self.window(i)?;
        if !self.table.is_monotone() {
            let rep = self.table.certify_monotone();
            let (a, b) = rep.violation.unwrap_or((0, 0));
            return Err(AtlasError::NotMonotone(a, b));
        }
        let (x, v) = dense_max(
            |x| self.h_value(x).unwrap_or(f64::NEG_INFINITY),
            w.lo,
            w.hi,
            self.opts.scan_points,
        );
        Ok((v, x))
    }

    /// Brackets `λ₀` (first zero of `c`) and `λ̃₀` (last zero) on a
    /// geometric grid, refining both by bisection in `ln λ`.
    pub fn thresholds(&self, i: usize) -> Result<Thresholds> {
        let w = self.window(i)?;
        let cap = self.lambda_cap(i)?;
        let (s_a, s_b) = self.table.s_hull();
        let c = |lambda: f64| -> f64 {
            let set = admissible_set(
                &self.coef,
                i,
                lambda,
                self.map.aux().nonlinearity(),
                self.lambda1(),
                self.opts.scan_points,
            );
            self.c_on_set(&set).0
        };
        let mut lo = w.max_value * s_a;
        let mut hi = (w.max_value * s_b).min(cap * (1.0 - 1e-9));
        for _ in 0..30 {
            if c(lo) < 0.0 {
                break;
            }
            lo *= 0.1;
        }
        if cap.is_infinite() {
            for _ in 0..30 {
                if c(hi) > 0.0 {
                    break;
                }
                hi *= 10.0;
            }
        }
        let grid = geomspace(lo, hi, self.opts.lambda_grid.max(8));
        let cs: Vec<f64> = grid.par_iter().map(|&l| c(l)).collect();
        let ups: Vec<usize> = (0..grid.len() - 1)
            .filter(|&k| cs[k] < 0.0 && cs[k + 1] >= 0.0)
            .collect();
        let refine = |k: usize| -> (f64, (f64, f64)) {
            let (a, b) = bisect(|x| c(x.exp()).min(1e300), grid[k].ln(), grid[k + 1].ln(), 1e-9);
            let (a, b) = (a.exp().min(b.exp()), a.exp().max(b.exp()));
            (0.5 * (a + b), (a, b))
        };
        let mut out = Thresholds {
            window: i,
            lambda0: None,
            lambda0_bracket: None,
            lambda0_tilde: None,
            lambda0_tilde_bracket: None,
            sharp: None,
            c_curve: grid.iter().copied().zip(cs.iter().copied()).collect(),
            note: None,
        };
        match (ups.first(), ups.last()) {
            (Some(&first), Some(&last)) => {
                let (l0, b0) = refine(first);
                out.lambda0 = Some(l0);
                out.lambda0_bracket = Some(b0);
                let (lt, bt) = if last == first { (l0, b0) } else { refine(last) };
                out.lambda0_tilde = Some(lt);
                out.lambda0_tilde_bracket = Some(bt);
            }
            _ => {
                let neg = cs.iter().filter(|&&v| v < 0.0).count();
                out.note = Some(if neg == cs.len() {
                    format!("c(lambda) < 0 on the whole grid [{lo:e}, {hi:e}]")
                } else {
                    format!("c(lambda) >= 0 on the whole grid [{lo:e}, {hi:e}]")
                });
            }
        }
        if self.table.is_monotone() {
            out.sharp = Some(self.sharp_threshold(i)?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aux_solver::AuxProblem;
    use crate::mesh::{Mesh, MeshSpec};
    use crate::model::{CoefficientKind, CoefficientRange, Nonlinearity, NonlinearityKind, NonlocalFunctional};

    pub(crate) fn analyzer(kind: NonlinearityKind, g: NonlocalFunctional, coef: CoefficientKind, k: usize) -> Analyzer {
        let mesh = Arc::new(Mesh::new(&MeshSpec::interval(1.0, 256)).unwrap());
        let aux = AuxProblem::new(mesh, Nonlinearity::new(kind).unwrap()).unwrap();
        let coef = Coefficient::new(
            coef,
            &CoefficientRange {
                k_max: Some(k),
                ..Default::default()
            },
        )
        .unwrap();
        Analyzer::new(QMap::new(aux, g), coef, AnalyzerOptions::default()).unwrap()
    }

    #[test]
    fn monotone_thresholds_coincide_with_sharp_value() {
        let an = analyzer(
            NonlinearityKind::Power { p: 1.5 },
            NonlocalFunctional::LpOfU { gamma: 2.0 },
            CoefficientKind::AbsSin,
            2,
        );
        for i in 0..2 {
            let th = an.thresholds(i).unwrap();
            let l0 = th.lambda0.unwrap();
            let lt = th.lambda0_tilde.unwrap();
            let (sharp, _) = th.sharp.unwrap();
            assert!((l0 - lt).abs() <= 1e-6 * l0);
            assert!((l0 - sharp).abs() <= 1e-6 * l0, "{l0} vs {sharp}");
            assert!(an.c_of_lambda(i, 1.05 * lt).unwrap().0 > 0.0);
            assert!(an.c_of_lambda(i, 0.5 * l0).unwrap().0 < 0.0);
        }
    }

    #[test]
    fn p_at_vanishing_endpoint_is_zero() {
        let an = analyzer(
            NonlinearityKind::Saturating { beta0: 2.0 },
            NonlocalFunctional::LpOfU { gamma: 1.0 },
            CoefficientKind::AbsSin,
            1,
        );
        let set = an.admissible_set(0, 3.0).unwrap();
        let iv = set.intervals[0];
        assert_eq!(iv.right, EndKind::Vanishing);
        assert_eq!(an.p_eval(0, 3.0, iv.hi).unwrap(), 0.0);
        assert!(an.p_eval(0, 3.0, 0.5 * (iv.lo + iv.hi)).unwrap() > 0.0);
        assert!(an.p_eval(0, 3.0, std::f64::consts::FRAC_PI_2).is_err());
        assert!(an.p_eval(0, 3.0, 0.0).is_err());
    }
}
