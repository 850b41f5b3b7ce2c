//! Uniform finite-difference meshes on an interval or a rectangle with
//! homogeneous Dirichlet data.
//!
//! Only interior nodes carry unknowns; boundary values are implicitly zero.
//! The canonical operator is the *negative* Laplacian `-Δ`, discretized by the
//! 3-point (1D) or 5-point (2D) central stencil, which is symmetric positive
//! definite. Quadrature is the trapezoid rule on the full grid, so every
//! interior node has weight `h` (1D) or `hx·hy` (2D).
//!
//! Gradient integrals are evaluated cell-wise: in 1D on the `n + 1` edges, in
//! 2D on the `(nx + 1)(ny + 1)` cells, with `|∇u|²` on a cell taken as the mean
//! of the squared edge differences bounding it. With that convention the
//! quadrature of `|∇u|²` equals the discrete Dirichlet form `⟨u, -Δu⟩`
//! exactly.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{AtlasError, Result};
use crate::io::{fmt_e, jnum, to_json_string};
use crate::linalg::{BandCholesky, SymBand};
use crate::numeric::{dist_inf, norm_inf};

/// Minimum interior node count per axis accepted by [`Mesh::new`].
pub const MIN_NODES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dim {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
}

/// Construction parameters for a [`Mesh`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshSpec {
    /// 1 or 2.
    pub dim: usize,
    /// Interval length, or `[lx, ly]`.
    pub extents: Vec<f64>,
    /// Interior node counts per axis.
    pub nodes: Vec<usize>,
}

impl MeshSpec {
    pub fn interval(length: f64, n: usize) -> Self {
        Self {
            dim: 1,
            extents: vec![length],
            nodes: vec![n],
        }
    }

    pub fn rectangle(lx: f64, ly: f64, nx: usize, ny: usize) -> Self {
        Self {
            dim: 2,
            extents: vec![lx, ly],
            nodes: vec![nx, ny],
        }
    }
}

/// Solver tolerances for mesh-level operations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshTolerances {
    pub eig: f64,
    pub lin: f64,
    pub eig_max_iters: usize,
}

impl Default for MeshTolerances {
    fn default() -> Self {
        Self {
            eig: 1e-10,
            lin: 1e-12,
            eig_max_iters: 10_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    dim: Dim,
    extents: [f64; 2],
    n: [usize; 2],
    h: [f64; 2],
    inv_h2: [f64; 2],
    weight: f64,
    laplacian: SymBand,
    factor: BandCholesky,
}

/// Values on the interior nodes of a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    values: Vec<f64>,
}

/// Principal Dirichlet eigenpair with `max φ₁ = 1`.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda1: f64,
    pub phi1: ScalarField,
    pub residual_inf: f64,
    pub iterations: usize,
}

impl ScalarField {
    pub fn from_vec(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn norm_inf(&self) -> f64 {
        norm_inf(&self.values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField::from_vec(self.values.iter().map(|&x| f(x)).collect())
    }

    pub fn scale(&self, c: f64) -> ScalarField {
        self.map(|x| c * x)
    }

    pub fn dist_inf(&self, other: &ScalarField) -> f64 {
        dist_inf(&self.values, &other.values)
    }
}

impl Mesh {
    pub fn new(spec: &MeshSpec) -> Result<Self> {
        let dim = match spec.dim {
            1 => Dim::One,
            2 => Dim::Two,
            d => return Err(AtlasError::invalid(format!("dimension must be 1 or 2, got {d}"))),
        };
        let axes = if dim == Dim::One { 1 } else { 2 };
        if spec.extents.len() != axes || spec.nodes.len() != axes {
            return Err(AtlasError::invalid(format!(
                "{axes}D mesh needs {axes} extents and {axes} node counts"
            )));
        }
        for &e in &spec.extents {
            if !(e > 0.0) || !e.is_finite() {
                return Err(AtlasError::invalid(format!("extent must be positive, got {e}")));
            }
        }
        for &n in &spec.nodes {
            if n < MIN_NODES {
                return Err(AtlasError::invalid(format!(
                    "at least {MIN_NODES} interior nodes per axis required, got {n}"
                )));
            }
        }
        let (extents, n) = match dim {
            Dim::One => ([spec.extents[0], 0.0], [spec.nodes[0], 1]),
            Dim::Two => ([spec.extents[0], spec.extents[1]], [spec.nodes[0], spec.nodes[1]]),
        };
        let h = [
            extents[0] / (n[0] + 1) as f64,
            if dim == Dim::Two { extents[1] / (n[1] + 1) as f64 } else { 1.0 },
        ];
        let inv_h2 = [
            1.0 / (h[0] * h[0]),
            if dim == Dim::Two { 1.0 / (h[1] * h[1]) } else { 0.0 },
        ];
        let weight = if dim == Dim::One { h[0] } else { h[0] * h[1] };
        let laplacian = assemble(dim, n, inv_h2);
        let factor = laplacian.clone().cholesky()?;
        Ok(Self {
            dim,
            extents,
            n,
            h,
            inv_h2,
            weight,
            laplacian,
            factor,
        })
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn extents(&self) -> &[f64] {
        match self.dim {
            Dim::One => &self.extents[..1],
            Dim::Two => &self.extents[..],
        }
    }

    pub fn nodes_per_axis(&self) -> &[usize] {
        match self.dim {
            Dim::One => &self.n[..1],
            Dim::Two => &self.n[..],
        }
    }

    pub fn spacing(&self) -> &[f64] {
        match self.dim {
            Dim::One => &self.h[..1],
            Dim::Two => &self.h[..],
        }
    }

    /// Largest node spacing.
    pub fn h_max(&self) -> f64 {
        self.spacing().iter().copied().fold(0.0, f64::max)
    }

    pub fn interior_count(&self) -> usize {
        self.n[0] * self.n[1]
    }

    /// Linear index of interior node `(i, j)` (x fastest).
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.n[0] * j
    }

    /// |Ω|.
    pub fn measure(&self) -> f64 {
        match self.dim {
            Dim::One => self.extents[0],
            Dim::Two => self.extents[0] * self.extents[1],
        }
    }

    /// Interior quadrature weight (all interior nodes share it).
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Sum of the full-grid trapezoid weights, boundary nodes included.
    pub fn quadrature_total(&self) -> f64 {
        match self.dim {
            Dim::One => {
                let nodes = self.n[0] + 2;
                self.h[0] * ((nodes - 2) as f64 + 1.0)
            }
            Dim::Two => {
                let wx = self.h[0] * ((self.n[0]) as f64 + 1.0);
                let wy = self.h[1] * ((self.n[1]) as f64 + 1.0);
                wx * wy
            }
        }
    }

    /// Coordinates of interior node `k`.
    pub fn coords(&self, k: usize) -> (f64, f64) {
        let i = k % self.n[0];
        let j = k / self.n[0];
        let x = (i + 1) as f64 * self.h[0];
        let y = if self.dim == Dim::Two { (j + 1) as f64 * self.h[1] } else { 0.0 };
        (x, y)
    }

    /// Samples `f(x, y)` at every interior node.
    pub fn field_from_fn(&self, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        ScalarField::from_vec(
            (0..self.interior_count())
                .map(|k| {
                    let (x, y) = self.coords(k);
                    f(x, y)
                })
                .collect(),
        )
    }

    pub fn zeros(&self) -> ScalarField {
        ScalarField::from_vec(vec![0.0; self.interior_count()])
    }

    pub fn constant(&self, c: f64) -> ScalarField {
        ScalarField::from_vec(vec![c; self.interior_count()])
    }

    pub fn check(&self, u: &ScalarField) -> Result<()> {
        if u.len() != self.interior_count() {
            return Err(AtlasError::MeshMismatch {
                expected: self.interior_count(),
                got: u.len(),
            });
        }
        Ok(())
    }

    /// Banded matrix of the discrete `-Δ`.
    pub fn laplacian_matrix(&self) -> &SymBand {
        &self.laplacian
    }

    /// Discrete `-Δu`.
    pub fn apply_laplacian(&self, u: &ScalarField) -> Result<ScalarField> {
        self.check(u)?;
        Ok(ScalarField::from_vec(self.neg_laplacian(u.values())))
    }

    pub(crate) fn neg_laplacian(&self, u: &[f64]) -> Vec<f64> {
        let (nx, ny) = (self.n[0], self.n[1]);
        let mut out = vec![0.0; u.len()];
        for j in 0..ny {
            for i in 0..nx {
                let k = i + nx * j;
                let c = u[k];
                let left = if i > 0 { u[k - 1] } else { 0.0 };
                let right = if i + 1 < nx { u[k + 1] } else { 0.0 };
                let mut v = (2.0 * c - left - right) * self.inv_h2[0];
                if self.dim == Dim::Two {
                    let down = if j > 0 { u[k - nx] } else { 0.0 };
                    let up = if j + 1 < ny { u[k + nx] } else { 0.0 };
                    v += (2.0 * c - down - up) * self.inv_h2[1];
                }
                out[k] = v;
            }
        }
        out
    }

    /// Solves `-Δu = rhs` with zero Dirichlet data by banded Cholesky.
    pub fn solve_poisson(&self, rhs: &ScalarField) -> Result<ScalarField> {
        self.check(rhs)?;
        Ok(ScalarField::from_vec(self.factor.solve(rhs.values())))
    }

    pub(crate) fn solve_raw(&self, rhs: &[f64]) -> Vec<f64> {
        self.factor.solve(rhs)
    }

    /// Torsion function `v`: `-Δv = 1`.
    pub fn torsion(&self) -> ScalarField {
        ScalarField::from_vec(self.solve_raw(&vec![1.0; self.interior_count()]))
    }

    pub fn principal_eigenpair(&self) -> Result<EigenPair> {
        self.principal_eigenpair_with(&MeshTolerances::default())
    }

    /// Inverse power iteration. Stops once successive Rayleigh quotients agree
    /// to `1e-12` relative and the eigen-residual is below `tol.eig · λ₁` (or
    /// has stopped improving at rounding level).
    pub fn principal_eigenpair_with(&self, tol: &MeshTolerances) -> Result<EigenPair> {
        let n = self.interior_count();
        let mut x = vec![1.0; n];
        let mut lambda_prev = f64::INFINITY;
        let mut best_res = f64::INFINITY;
        let mut stall = 0usize;
        for it in 1..=tol.eig_max_iters {
            let y = self.solve_raw(&x);
            let ymax = norm_inf(&y);
            x = y.into_iter().map(|v| v / ymax).collect();
            let ax = self.neg_laplacian(&x);
            let num: f64 = x.iter().zip(&ax).map(|(a, b)| a * b).sum();
            let den: f64 = x.iter().map(|a| a * a).sum();
            let lambda = num / den;
            let res = ax
                .iter()
                .zip(&x)
                .fold(0.0f64, |m, (a, v)| m.max((a - lambda * v).abs()));
            let eig_ok = (lambda - lambda_prev).abs() <= 1e-12 * lambda;
            if res < 0.5 * best_res {
                best_res = res;
                stall = 0;
            } else {
                stall += 1;
            }
            if eig_ok && (res <= tol.eig * lambda || stall >= 5) {
                let phi1 = ScalarField::from_vec(x);
                if phi1.min() <= 0.0 {
                    return Err(AtlasError::Verification(
                        "principal eigenfunction is not positive".into(),
                    ));
                }
                return Ok(EigenPair {
                    lambda1: lambda,
                    phi1,
                    residual_inf: res,
                    iterations: it,
                });
            }
            lambda_prev = lambda;
        }
        Err(AtlasError::NonConvergence {
            what: "inverse power iteration",
            iterations: tol.eig_max_iters,
            last_change: best_res,
        })
    }

    /// Trapezoid quadrature of a field (boundary values are zero).
    pub fn integrate(&self, u: &ScalarField) -> Result<f64> {
        self.check(u)?;
        Ok(self.integrate_raw(u.values()))
    }

    pub(crate) fn integrate_raw(&self, u: &[f64]) -> f64 {
        self.weight * u.iter().sum::<f64>()
    }

    /// Nodal `|∇u|` by central differences, using the zero boundary value at
    /// nodes adjacent to the boundary.
    pub fn gradient_magnitude(&self, u: &ScalarField) -> Result<ScalarField> {
        self.check(u)?;
        let (nx, ny) = (self.n[0], self.n[1]);
        let v = u.values();
        let at = |i: isize, j: isize| -> f64 {
            if i < 0 || j < 0 || i >= nx as isize || j >= ny as isize {
                0.0
            } else {
                v[i as usize + nx * j as usize]
            }
        };
        let mut out = Vec::with_capacity(v.len());
        for j in 0..ny as isize {
            for i in 0..nx as isize {
                let gx = (at(i + 1, j) - at(i - 1, j)) / (2.0 * self.h[0]);
                let gy = if self.dim == Dim::Two {
                    (at(i, j + 1) - at(i, j - 1)) / (2.0 * self.h[1])
                } else {
                    0.0
                };
                out.push((gx * gx + gy * gy).sqrt());
            }
        }
        Ok(ScalarField::from_vec(out))
    }

    /// Cell-wise `|∇u|²` (see module docs) and the cell weight.
    pub(crate) fn cell_gradient_sq(&self, u: &[f64]) -> (Vec<f64>, f64) {
        let (nx, ny) = (self.n[0], self.n[1]);
        match self.dim {
            Dim::One => {
                let mut out = Vec::with_capacity(nx + 1);
                let mut prev = 0.0;
                for k in 0..=nx {
                    let next = if k < nx { u[k] } else { 0.0 };
                    let d = (next - prev) / self.h[0];
                    out.push(d * d);
                    prev = next;
                }
                (out, self.h[0])
            }
            Dim::Two => {
                let at = |i: isize, j: isize| -> f64 {
                    if i < 0 || j < 0 || i >= nx as isize || j >= ny as isize {
                        0.0
                    } else {
                        u[i as usize + nx * j as usize]
                    }
                };
                let mut out = Vec::with_capacity((nx + 1) * (ny + 1));
                // cell (ci, cj) spans nodes ci-1..ci and cj-1..cj
                for cj in 0..=ny as isize {
                    for ci in 0..=nx as isize {
                        let (i0, i1, j0, j1) = (ci - 1, ci, cj - 1, cj);
                        let dx0 = (at(i1, j0) - at(i0, j0)) / self.h[0];
                        let dx1 = (at(i1, j1) - at(i0, j1)) / self.h[0];
                        let dy0 = (at(i0, j1) - at(i0, j0)) / self.h[1];
                        let dy1 = (at(i1, j1) - at(i1, j0)) / self.h[1];
                        out.push(0.5 * (dx0 * dx0 + dx1 * dx1) + 0.5 * (dy0 * dy0 + dy1 * dy1));
                    }
                }
                (out, self.h[0] * self.h[1])
            }
        }
    }

    /// `∫ φ(|∇u|)` by cell quadrature.
    pub fn integrate_gradient(&self, u: &ScalarField, phi: impl Fn(f64) -> f64) -> Result<f64> {
        self.check(u)?;
        let (g2, w) = self.cell_gradient_sq(u.values());
        Ok(w * g2.iter().map(|&q| phi(q.sqrt())).sum::<f64>())
    }

    /// `max |∇u|` over cells.
    pub fn gradient_sup(&self, u: &ScalarField) -> Result<f64> {
        self.check(u)?;
        let (g2, _) = self.cell_gradient_sq(u.values());
        Ok(g2.iter().copied().fold(0.0, f64::max).sqrt())
    }

    /// `∫ |∇u|²`, equal to `⟨u, -Δu⟩` in the mesh quadrature.
    pub fn dirichlet_energy(&self, u: &ScalarField) -> Result<f64> {
        self.integrate_gradient(u, |t| t * t)
    }

    /// JSON metadata header `{dim, extents, n, h}`.
    pub fn metadata_json(&self) -> serde_json::Value {
        json!({
            "dim": self.extents().len(),
            "extents": self.extents().iter().map(|&e| jnum(e)).collect::<Vec<_>>(),
            "n": self.nodes_per_axis(),
            "h": self.spacing().iter().map(|&e| jnum(e)).collect::<Vec<_>>(),
        })
    }

    /// CSV `index,x[,y],value`.
    pub fn field_csv(&self, u: &ScalarField) -> Result<String> {
        self.check(u)?;
        let mut out = String::new();
        match self.dim {
            Dim::One => out.push_str("index,x,value\n"),
            Dim::Two => out.push_str("index,x,y,value\n"),
        }
        for (k, &v) in u.values().iter().enumerate() {
            let (x, y) = self.coords(k);
            match self.dim {
                Dim::One => writeln!(out, "{k},{},{}", fmt_e(x), fmt_e(v)).unwrap(),
                Dim::Two => writeln!(out, "{k},{},{},{}", fmt_e(x), fmt_e(y), fmt_e(v)).unwrap(),
            }
        }
        Ok(out)
    }

    pub fn metadata_string(&self) -> String {
        to_json_string(&self.metadata_json())
    }
}

fn assemble(dim: Dim, n: [usize; 2], inv_h2: [f64; 2]) -> SymBand {
    let (nx, ny) = (n[0], n[1]);
    let bw = if dim == Dim::One { 1 } else { nx };
    let mut a = SymBand::zeros(nx * ny, bw);
    for j in 0..ny {
        for i in 0..nx {
            let k = i + nx * j;
            let diag = 2.0 * inv_h2[0] + if dim == Dim::Two { 2.0 * inv_h2[1] } else { 0.0 };
            a.set(k, k, diag);
            if i > 0 {
                a.set(k, k - 1, -inv_h2[0]);
            }
            if dim == Dim::Two && j > 0 {
                a.set(k, k - nx, -inv_h2[1]);
            }
        }
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit_interval(n: usize) -> Mesh {
        Mesh::new(&MeshSpec::interval(1.0, n)).unwrap()
    }

    #[test]
    fn uniform_grid_arithmetic() {
        let m = unit_interval(1024);
        assert_eq!(m.interior_count(), 1024);
        assert!((m.spacing()[0] - 1.0 / 1025.0).abs() < 1e-16);
        let sq = Mesh::new(&MeshSpec::rectangle(1.0, 1.0, 64, 64)).unwrap();
        assert_eq!(sq.interior_count(), 4096);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(Mesh::new(&MeshSpec::interval(-1.0, 100)).is_err());
        assert!(Mesh::new(&MeshSpec::interval(1.0, 5)).is_err());
        assert!(Mesh::new(&MeshSpec { dim: 3, extents: vec![1.0; 3], nodes: vec![10; 3] }).is_err());
    }

    #[test]
    fn quadrature_weights_sum_to_measure() {
        for m in [
            unit_interval(100),
            Mesh::new(&MeshSpec::interval(2.5, 37)).unwrap(),
            Mesh::new(&MeshSpec::rectangle(1.0, 2.0, 20, 31)).unwrap(),
        ] {
            let rel = (m.quadrature_total() - m.measure()).abs() / m.measure();
            assert!(rel < 1e-12, "rel = {rel}");
            assert!(m.weight() > 0.0);
        }
    }

    #[test]
    fn laplacian_of_quadratic_is_exactly_one() {
        let m = unit_interval(200);
        let u = m.field_from_fn(|x, _| x * (1.0 - x) / 2.0);
        let lu = m.apply_laplacian(&u).unwrap();
        for v in lu.values() {
            assert!((v - 1.0).abs() < 1e-8);
        }
        assert_eq!(m.apply_laplacian(&m.zeros()).unwrap().norm_inf(), 0.0);
    }

    #[test]
    fn laplacian_of_sine_second_order() {
        let err = |n: usize| {
            let m = unit_interval(n);
            let u = m.field_from_fn(|x, _| (PI * x).sin());
            let lu = m.apply_laplacian(&u).unwrap();
            lu.values()
                .iter()
                .zip(u.values())
                .fold(0.0f64, |e, (a, b)| e.max((a - PI * PI * b).abs()))
        };
        let (e1, e2) = (err(127), err(255));
        assert!(e1 < 1e-2);
        let ratio = e1 / e2;
        assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
    }

    #[test]
    fn torsion_of_interval() {
        let m = unit_interval(1024);
        let v = m.solve_poisson(&m.constant(1.0)).unwrap();
        assert!((v.norm_inf() - 0.125).abs() < 1e-6);
        let back = m.apply_laplacian(&v).unwrap();
        for x in back.values() {
            assert!((x - 1.0).abs() <= 1e-12 * 1e3, "{x}");
        }
        assert_eq!(m.solve_poisson(&m.zeros()).unwrap().norm_inf(), 0.0);
    }

    #[test]
    fn eigenvalues_of_boxes() {
        let e = unit_interval(256).principal_eigenpair().unwrap();
        assert!((e.lambda1 - PI * PI).abs() / (PI * PI) < 1e-4);
        assert!((e.phi1.max() - 1.0).abs() < 1e-15);
        let e2 = Mesh::new(&MeshSpec::interval(2.0, 256)).unwrap().principal_eigenpair().unwrap();
        assert!((e2.lambda1 - PI * PI / 4.0).abs() / (PI * PI / 4.0) < 1e-4);
        let sq = Mesh::new(&MeshSpec::rectangle(1.0, 1.0, 48, 48)).unwrap();
        let e3 = sq.principal_eigenpair().unwrap();
        assert!((e3.lambda1 - 2.0 * PI * PI).abs() / (2.0 * PI * PI) < 1e-3);
        assert!(e3.phi1.min() > 0.0);
    }

    #[test]
    fn eigenvalue_error_is_second_order() {
        let err = |n| (unit_interval(n).principal_eigenpair().unwrap().lambda1 - PI * PI).abs();
        let ratio = err(63) / err(127);
        assert!(ratio > 3.8 && ratio < 4.2, "ratio {ratio}");
    }

    #[test]
    fn integrals() {
        let m = unit_interval(1024);
        let s = m.field_from_fn(|x, _| (PI * x).sin());
        assert!((m.integrate(&s).unwrap() - 2.0 / PI).abs() < 1e-6);
        let q = m.field_from_fn(|x, _| x * (1.0 - x) / 2.0);
        assert!((m.integrate(&q).unwrap() - 1.0 / 12.0).abs() < 1e-6);
        assert_eq!(m.integrate(&m.zeros()).unwrap(), 0.0);
        assert!((m.dirichlet_energy(&s).unwrap() - PI * PI / 2.0).abs() < 1e-4);
    }

    #[test]
    fn gradient_magnitudes() {
        let m = unit_interval(1024);
        let s = m.field_from_fn(|x, _| (PI * x).sin());
        let g = m.gradient_magnitude(&s).unwrap();
        for (k, v) in g.values().iter().enumerate() {
            let (x, _) = m.coords(k);
            assert!((v - PI * (PI * x).cos().abs()).abs() < 1e-4);
        }
        // tent with slope 1 on a coarse mesh
        let coarse = unit_interval(11);
        let tent = coarse.field_from_fn(|x, _| x.min(1.0 - x));
        let gt = coarse.gradient_magnitude(&tent).unwrap();
        for (k, v) in gt.values().iter().enumerate() {
            if k != 5 {
                assert!((v - 1.0).abs() < 1e-12, "node {k}: {v}");
            }
        }
        assert_eq!(m.gradient_magnitude(&m.zeros()).unwrap().norm_inf(), 0.0);
    }

    #[test]
    fn dirichlet_form_matches_inner_product_2d() {
        let m = Mesh::new(&MeshSpec::rectangle(1.0, 1.5, 12, 17)).unwrap();
        let u = m.field_from_fn(|x, y| (x * 3.0).sin() * y * (1.5 - y) + 0.1 * (7.0 * x * y).cos());
        let lu = m.apply_laplacian(&u).unwrap();
        let ip: f64 = m.weight() * u.values().iter().zip(lu.values()).map(|(a, b)| a * b).sum::<f64>();
        let de = m.dirichlet_energy(&u).unwrap();
        assert!((ip - de).abs() < 1e-10 * de.abs());
    }

    #[test]
    fn mismatch_detected() {
        let m = unit_interval(20);
        let u = ScalarField::from_vec(vec![1.0; 19]);
        assert!(matches!(m.apply_laplacian(&u), Err(AtlasError::MeshMismatch { .. })));
    }

    #[test]
    fn csv_has_header() {
        let m = unit_interval(10);
        let csv = m.field_csv(&m.constant(1.0)).unwrap();
        assert!(csv.starts_with("index,x,value\n0,9.090909090909e-02,1.000000000000e+00\n"));
    }
}
