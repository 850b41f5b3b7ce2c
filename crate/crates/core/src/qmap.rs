//! Sampled graph of `Q(s) = g(w_s)` with monotone interpolation and inverse.
//!
//! Samples are uniform in `x(s) = ln(s - s₀) - ln(s₁ - s)` (the second term
//! only when `s₁` is finite), which clusters them geometrically toward both
//! ends of the admissible range `(s₀, s₁)`. Interpolation runs in
//! `(x, ln Q)`: monotone cubic (PCHIP) when the samples increase, linear
//! otherwise.

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::aux_solver::{AuxProblem, AuxSolution, SRange};
use crate::error::{AtlasError, Result};
use crate::io::{csv_string, jnum, to_json_string};
use crate::mesh::ScalarField;
use crate::model::NonlocalFunctional;
use crate::numeric::bisect;

/// Smallest sample count accepted.
pub const MIN_SAMPLES: usize = 16;

/// An auxiliary problem paired with the functional `g`.
#[derive(Debug, Clone)]
pub struct QMap {
    aux: AuxProblem,
    g: NonlocalFunctional,
}

impl QMap {
    pub fn new(aux: AuxProblem, g: NonlocalFunctional) -> Self {
        if g.uses_gradient() && aux.nonlinearity().lacks_sublinear_tail() {
            log::warn!(
                "{} has theta = 0 and no sublinear tail; the growth hypothesis for gradient functionals is not met",
                aux.nonlinearity().label()
            );
        }
        Self { aux, g }
    }

    pub fn aux(&self) -> &AuxProblem {
        &self.aux
    }

    pub fn functional(&self) -> &NonlocalFunctional {
        &self.g
    }

    pub fn s_range(&self) -> SRange {
        self.aux.s_range()
    }

    /// `Q(s)` by a direct solve.
    pub fn eval(&self, s: f64) -> Result<(f64, AuxSolution)> {
        let sol = self.aux.solve(s)?;
        let q = self.g.eval(self.aux.mesh(), &sol.w, Some(&sol.neg_laplacian))?;
        Ok((q, sol))
    }

    /// `x(s)`, the sampling coordinate.
    pub fn to_x(&self, s: f64) -> f64 {
        to_x(self.s_range(), s)
    }

    pub fn from_x(&self, x: f64) -> f64 {
        from_x(self.s_range(), x)
    }
}

pub fn to_x(r: SRange, s: f64) -> f64 {
    let a = (s - r.lo).ln();
    if r.hi.is_finite() {
        a - (r.hi - s).ln()
    } else {
        a
    }
}

pub fn from_x(r: SRange, x: f64) -> f64 {
    if r.hi.is_finite() {
        let w = r.hi - r.lo;
        if x > 0.0 {
            r.hi - w / (1.0 + x.exp())
        } else {
            r.lo + w / (1.0 + (-x).exp())
        }
    } else {
        r.lo + x.exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingSpec {
    pub samples: usize,
    /// Initial sampled `s` interval; defaults derive from the range and `λ₁`.
    pub s_min: Option<f64>,
    pub s_max: Option<f64>,
    /// Extend the low end until `Q(s_min) ≤ q_floor`.
    pub q_floor: Option<f64>,
    /// Extend the high end until `Q(s_max) ≥ q_ceiling`.
    pub q_ceiling: Option<f64>,
    /// Extension rounds per end; each adds `samples/2` points at the original
    /// spacing (or closer, near the range margin).
    pub refine_rounds: usize,
    /// Keep the sampled fields `w_s`.
    pub keep_fields: bool,
}

impl Default for SamplingSpec {
    fn default() -> Self {
        Self {
            samples: 64,
            s_min: None,
            s_max: None,
            q_floor: None,
            q_ceiling: None,
            refine_rounds: 3,
            keep_fields: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QSample {
    pub s: f64,
    pub q: f64,
    pub residual: f64,
    pub energy: f64,
    pub uniqueness_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneReport {
    pub monotone: bool,
    pub violation: Option<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct QTable {
    range: SRange,
    samples: Vec<QSample>,
    fields: Vec<ScalarField>,
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
    monotone: bool,
    violation: Option<(usize, usize)>,
}

/// Sample `Q` on the spec's grid, extending toward the ends of the range
/// until the requested floor and ceiling are reached.
pub fn tabulate_q(map: &QMap, spec: &SamplingSpec) -> Result<QTable> {
    if spec.samples < MIN_SAMPLES {
        return Err(AtlasError::invalid(format!(
            "sampling too coarse: {} samples, need at least {MIN_SAMPLES}",
            spec.samples
        )));
    }
    let range = map.s_range();
    let margin = 10.0 * map.aux().options().margin;
    let (x_min, x_max) = x_limits(range, margin);
    let lambda1 = map.aux().lambda1();
    let (s_lo, s_hi) = default_window(range, lambda1);
    let xa = to_x(range, spec.s_min.unwrap_or(s_lo)).max(x_min);
    let xb = to_x(range, spec.s_max.unwrap_or(s_hi)).min(x_max);
    if !(xb > xa) {
        return Err(AtlasError::invalid("empty sampling window"));
    }
    let dx = (xb - xa) / (spec.samples - 1) as f64;
    let mut xs: Vec<f64> = (0..spec.samples).map(|k| xa + dx * k as f64).collect();
    *xs.last_mut().expect("nonempty") = xb;
    let mut solved = solve_batch(map, range, &xs)?;

    let per_round = spec.samples / 2;
    for side in [Side::Low, Side::High] {
        let mut rounds = 0;
        loop {
            let done = match side {
                Side::Low => spec.q_floor.is_none_or(|f| solved[0].0.q <= f),
                Side::High => spec.q_ceiling.is_none_or(|c| solved.last().expect("nonempty").0.q >= c),
            };
            if done {
                break;
            }
            if rounds == spec.refine_rounds {
                return Err(AtlasError::RefinementExhausted(format!(
                    "Q table {} end after {rounds} rounds (Q = {:e})",
                    if side == Side::Low { "low" } else { "high" },
                    if side == Side::Low { solved[0].0.q } else { solved.last().expect("nonempty").0.q }
                )));
            }
            rounds += 1;
            let new_x: Vec<f64> = match side {
                Side::Low => {
                    let x0 = xs[0];
                    if x0 <= x_min {
                        return Err(AtlasError::RefinementExhausted("low end reached the range margin".into()));
                    }
                    let step = ((x0 - x_min) / per_round as f64).min(dx);
                    (1..=per_round).rev().map(|k| x0 - step * k as f64).collect()
                }
                Side::High => {
                    let x1 = *xs.last().expect("nonempty");
                    if x1 >= x_max {
                        return Err(AtlasError::RefinementExhausted("high end reached the range margin".into()));
                    }
                    let step = ((x_max - x1) / per_round as f64).min(dx);
                    (1..=per_round).map(|k| x1 + step * k as f64).collect()
                }
            };
            let extra = solve_batch(map, range, &new_x)?;
            match side {
                Side::Low => {
                    xs.splice(0..0, new_x);
                    solved.splice(0..0, extra);
                }
                Side::High => {
                    xs.extend(new_x);
                    solved.extend(extra);
                }
            }
        }
    }
    let (samples, fields): (Vec<_>, Vec<_>) = solved.into_iter().unzip();
    let mut table = QTable::assemble(range, samples)?;
    if spec.keep_fields {
        table.fields = fields;
    }
    Ok(table)
}

#[derive(Clone, Copy, PartialEq)]
enum Side {
    Low,
    High,
}

/// Default initial window: the middle of a two-sided range, or three decades
/// below and two above a reference scale otherwise.
fn default_window(r: SRange, lambda1: f64) -> (f64, f64) {
    match (r.lo > 0.0, r.hi.is_finite()) {
        (_, true) => (from_x(r, -8.0), from_x(r, 8.0)),
        (true, false) => (r.lo * (1.0 + 1e-4), r.lo * 100.0),
        (false, false) => (lambda1 * 1e-3, lambda1 * 1e2),
    }
}

fn x_limits(r: SRange, margin: f64) -> (f64, f64) {
    let lo = if r.lo > 0.0 {
        to_x(r, r.lo * (1.0 + margin))
    } else {
        f64::NEG_INFINITY
    };
    let hi = if r.hi.is_finite() {
        to_x(r, r.hi * (1.0 - margin))
    } else {
        f64::INFINITY
    };
    (lo.max(-700.0), hi.min(700.0))
}

fn solve_batch(map: &QMap, range: SRange, xs: &[f64]) -> Result<Vec<(QSample, ScalarField)>> {
    xs.par_iter()
        .map(|&x| {
            let s = from_x(range, x);
            let (q, sol) = map.eval(s).map_err(|e| AtlasError::SampleFailure { s, source: Box::new(e) })?;
            Ok((
                QSample {
                    s,
                    q,
                    residual: sol.residual_inf,
                    energy: sol.energy,
                    uniqueness_gap: sol.uniqueness_gap,
                },
                sol.w,
            ))
        })
        .collect()
}

impl QTable {
    /// Table from externally supplied `(s, Q)` pairs.
    pub fn from_samples(range: SRange, pairs: &[(f64, f64)]) -> Result<Self> {
        let samples = pairs
            .iter()
            .map(|&(s, q)| QSample {
                s,
                q,
                residual: 0.0,
                energy: 0.0,
                uniqueness_gap: 0.0,
            })
            .collect();
        Self::assemble(range, samples)
    }

    fn assemble(range: SRange, samples: Vec<QSample>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(AtlasError::invalid("Q table needs at least two samples"));
        }
        for w in samples.windows(2) {
            if !(w[1].s > w[0].s) {
                return Err(AtlasError::invalid("Q samples must have strictly increasing s"));
            }
        }
        for smp in &samples {
            if !range.contains(smp.s) || !(smp.q > 0.0) || !smp.q.is_finite() {
                return Err(AtlasError::invalid(format!(
                    "Q sample (s = {}, Q = {}) outside the admissible range or not positive",
                    smp.s, smp.q
                )));
            }
        }
        let violation = samples
            .windows(2)
            .position(|w| !(w[1].q > w[0].q))
            .map(|k| (k, k + 1));
        let monotone = violation.is_none();
        let xs: Vec<f64> = samples.iter().map(|p| to_x(range, p.s)).collect();
        let ys: Vec<f64> = samples.iter().map(|p| p.q.ln()).collect();
        let slopes = if monotone { pchip_slopes(&xs, &ys) } else { Vec::new() };
        Ok(Self {
            range,
            samples,
            fields: Vec::new(),
            xs,
            ys,
            slopes,
            monotone,
            violation,
        })
    }

    pub fn range(&self) -> SRange {
        self.range
    }

    pub fn samples(&self) -> &[QSample] {
        &self.samples
    }

    /// Sampled `w_s` (empty unless requested).
    pub fn fields(&self) -> &[ScalarField] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn is_monotone(&self) -> bool {
        self.monotone
    }

    pub fn certify_monotone(&self) -> MonotoneReport {
        MonotoneReport {
            monotone: self.monotone,
            violation: self.violation,
        }
    }

    /// Sampled `s` hull.
    pub fn s_hull(&self) -> (f64, f64) {
        (self.samples[0].s, self.samples[self.len() - 1].s)
    }

    /// Sampled `Q` hull (monotone tables).
    pub fn q_hull(&self) -> (f64, f64) {
        (self.samples[0].q, self.samples[self.len() - 1].q)
    }

    fn interp_y(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let k = (self.xs.partition_point(|&v| v <= x).max(1) - 1).min(n - 2);
        let (x0, x1) = (self.xs[k], self.xs[k + 1]);
        let (y0, y1) = (self.ys[k], self.ys[k + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        if !self.monotone {
            return y0 + (y1 - y0) * t;
        }
        let (d0, d1) = (self.slopes[k], self.slopes[k + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * h * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * h * d1
    }

    /// Interpolated `Q(s)` within the sampled hull.
    pub fn q_eval(&self, s: f64) -> Result<f64> {
        let (a, b) = self.s_hull();
        if !(s >= a && s <= b) {
            return Err(AtlasError::OutOfRange { value: s, lo: a, hi: b });
        }
        if let Some(k) = self.samples.iter().position(|p| p.s == s) {
            return Ok(self.samples[k].q);
        }
        Ok(self.interp_y(to_x(self.range, s)).exp())
    }

    /// `Q(s)` on the whole admissible range: interpolated inside the hull,
    /// continued linearly in `(x, ln Q)` with the end secants outside it.
    /// The continuation keeps the limits `Q → 0` at the low end and
    /// `Q → ∞` at the high end of a monotone table.
    pub fn q_eval_extended(&self, s: f64) -> f64 {
        let (a, b) = self.s_hull();
        if s >= a && s <= b {
            return self.q_eval(s).expect("inside hull");
        }
        if !self.range.contains(s) {
            return if s <= self.range.lo { 0.0 } else { f64::INFINITY };
        }
        let x = to_x(self.range, s);
        let n = self.xs.len();
        let (k0, k1) = if s < a { (0, 1) } else { (n - 2, n - 1) };
        let slope = (self.ys[k1] - self.ys[k0]) / (self.xs[k1] - self.xs[k0]);
        let anchor = if s < a { 0 } else { n - 1 };
        (self.ys[anchor] + slope * (x - self.xs[anchor])).exp()
    }

    /// `Q⁻¹(α)` for `α` inside the sampled `Q` hull of a monotone table.
    pub fn q_inverse(&self, alpha: f64) -> Result<f64> {
        self.require_monotone()?;
        let (qa, qb) = self.q_hull();
        if !(alpha >= qa && alpha <= qb) {
            return Err(AtlasError::RefinementExhausted(format!(
                "alpha = {alpha:e} outside the sampled Q range [{qa:e}, {qb:e}]"
            )));
        }
        if let Some(k) = self.samples.iter().position(|p| p.q == alpha) {
            return Ok(self.samples[k].s);
        }
        let y = alpha.ln();
        let k = (self.ys.partition_point(|&v| v <= y).max(1) - 1).min(self.len() - 2);
        let (lo, hi) = bisect(|x| self.interp_y(x) - y, self.xs[k], self.xs[k + 1], 1e-15);
        Ok(from_x(self.range, 0.5 * (lo + hi)))
    }

    /// Inverse of [`QTable::q_eval_extended`].
    pub fn q_inverse_extended(&self, alpha: f64) -> Result<f64> {
        self.require_monotone()?;
        if !(alpha > 0.0) {
            return Err(AtlasError::invalid("Q inverse needs alpha > 0"));
        }
        let (qa, qb) = self.q_hull();
        if alpha >= qa && alpha <= qb {
            return self.q_inverse(alpha);
        }
        let n = self.xs.len();
        let (k0, k1, anchor) = if alpha < qa { (0, 1, 0) } else { (n - 2, n - 1, n - 1) };
        let slope = (self.ys[k1] - self.ys[k0]) / (self.xs[k1] - self.xs[k0]);
        let x = self.xs[anchor] + (alpha.ln() - self.ys[anchor]) / slope;
        Ok(from_x(self.range, x))
    }

    fn require_monotone(&self) -> Result<()> {
        match self.violation {
            Some((i, j)) => Err(AtlasError::NotMonotone(i, j)),
            None => Ok(()),
        }
    }

    /// Least-squares fit `ln Q = slope · ln s + intercept`.
    pub fn loglog_fit(&self) -> (f64, f64) {
        let pts: Vec<(f64, f64)> = self.samples.iter().map(|p| (p.s.ln(), p.q.ln())).collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        let slope = sxy / sxx;
        (slope, my - slope * mx)
    }

    /// CSV `s,Q,residual,energy`.
    pub fn to_csv(&self) -> String {
        csv_string(
            &["s", "Q", "residual", "energy"],
            self.samples.iter().map(|p| vec![p.s, p.q, p.residual, p.energy]),
        )
    }

    pub fn metadata_json(&self) -> Value {
        let (a, b) = self.s_hull();
        json!({
            "range": {
                "lo": jnum(self.range.lo),
                "hi": jnum(self.range.hi),
                "lo_finite_positive": self.range.lo > 0.0,
                "hi_finite": self.range.hi.is_finite(),
                "open": true,
            },
            "sampled": { "s_min": jnum(a), "s_max": jnum(b), "count": self.len() },
            "monotone": self.monotone,
            "violation": self.violation.map(|(i, j)| vec![i, j]),
            "interpolation": if self.monotone { "pchip_log" } else { "linear_log" },
        })
    }

    pub fn metadata_string(&self) -> String {
        to_json_string(&self.metadata_json())
    }
}

/// Shape-preserving derivative estimates (Fritsch-Carlson with the
/// three-point end formula).
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let del: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    let mut d = vec![0.0; n];
    if n == 2 {
        d[0] = del[0];
        d[1] = del[0];
        return d;
    }
    for k in 1..n - 1 {
        if del[k - 1] * del[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let v = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if v * d0 <= 0.0 {
            0.0
        } else if d0 * d1 <= 0.0 && v.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            v
        }
    };
    d[0] = end(h[0], h[1], del[0], del[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{Mesh, MeshSpec};
    use crate::model::{Nonlinearity, NonlinearityKind};
    use std::sync::Arc;

    fn map(kind: NonlinearityKind, g: NonlocalFunctional, n: usize) -> QMap {
        let mesh = Arc::new(Mesh::new(&MeshSpec::interval(1.0, n)).unwrap());
        QMap::new(AuxProblem::new(mesh, Nonlinearity::new(kind).unwrap()).unwrap(), g)
    }

    #[test]
    fn x_coordinate_round_trip() {
        for r in [
            SRange { lo: 0.0, hi: f64::INFINITY },
            SRange { lo: 4.9, hi: f64::INFINITY },
            SRange { lo: 0.0, hi: 9.8 },
            SRange { lo: 3.2, hi: 19.6 },
        ] {
            for x in [-12.0, -2.0, 0.0, 1.5, 12.0] {
                let s = from_x(r, x);
                assert!(r.contains(s));
                assert!((to_x(r, s) - x).abs() < 1e-8 * (1.0 + x.abs()), "{r:?} {x}");
            }
        }
    }

    #[test]
    fn power_table_follows_closed_form() {
        let m = map(NonlinearityKind::Power { p: 1.5 }, NonlocalFunctional::LpOfU { gamma: 2.0 }, 128);
        let table = tabulate_q(&m, &SamplingSpec::default()).unwrap();
        assert!(table.is_monotone());
        let (c_v, _) = m.eval(1.0).unwrap();
        for p in table.samples() {
            assert!((p.q / (c_v * p.s.powi(4)) - 1.0).abs() < 1e-8);
        }
        let (slope, _) = table.loglog_fit();
        assert!((slope - 4.0).abs() < 1e-8);
        // interpolation and inverse
        for k in 0..20 {
            let s = 0.05 * 1.3f64.powi(k);
            let q = table.q_eval(s).unwrap();
            assert!((q / (c_v * s.powi(4)) - 1.0).abs() < 1e-6);
            let back = table.q_inverse(q).unwrap();
            assert!((back / s - 1.0).abs() < 1e-8);
        }
        assert!(table.q_eval(1e-9).is_err());
        let first = &table.samples()[3];
        assert_eq!(table.q_eval(first.s).unwrap(), first.q);
        assert_eq!(table.q_inverse(first.q).unwrap(), first.s);
    }

    #[test]
    fn saturating_table_vanishes_at_low_end() {
        let m = map(NonlinearityKind::Saturating { beta0: 2.0 }, NonlocalFunctional::LpOfU { gamma: 1.0 }, 128);
        let spec = SamplingSpec {
            q_floor: Some(1e-3),
            q_ceiling: Some(20.0),
            ..Default::default()
        };
        let table = tabulate_q(&m, &spec).unwrap();
        assert!(table.is_monotone());
        assert!(table.samples()[0].q <= 1e-3);
        assert!(table.samples().last().unwrap().q >= 20.0);
        assert!(table.q_eval_extended(table.range().lo * (1.0 + 1e-12)) < table.samples()[0].q);
    }

    #[test]
    fn rejects_coarse_sampling_and_detects_dips() {
        let m = map(NonlinearityKind::Power { p: 1.5 }, NonlocalFunctional::LpOfU { gamma: 1.0 }, 32);
        let spec = SamplingSpec {
            samples: 3,
            ..Default::default()
        };
        assert!(tabulate_q(&m, &spec).is_err());

        let r = SRange { lo: 0.0, hi: f64::INFINITY };
        let t = QTable::from_samples(r, &[(1.0, 1.0), (2.0, 2.0), (3.0, 1.5), (4.0, 3.0)]).unwrap();
        let rep = t.certify_monotone();
        assert!(!rep.monotone);
        assert_eq!(rep.violation, Some((1, 2)));
        assert!(matches!(t.q_inverse(1.2), Err(AtlasError::NotMonotone(1, 2))));
    }

    #[test]
    fn monotone_interpolant_stays_between_neighbours() {
        let r = SRange { lo: 0.0, hi: f64::INFINITY };
        let pairs: Vec<(f64, f64)> = (1..=20).map(|k| (k as f64, (k as f64).powi(3) + if k > 10 { 1e3 } else { 0.0 })).collect();
        let t = QTable::from_samples(r, &pairs).unwrap();
        for w in pairs.windows(2) {
            for j in 1..10 {
                let s = w[0].0 + (w[1].0 - w[0].0) * j as f64 / 10.0;
                let q = t.q_eval(s).unwrap();
                assert!(q > w[0].1 && q < w[1].1);
            }
        }
    }
}
