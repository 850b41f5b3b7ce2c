//! Banded symmetric positive-definite factorization.
//!
//! The discrete Dirichlet Laplacian on a box, with natural (x-fastest)
//! ordering, is a symmetric band matrix whose half-bandwidth equals the
//! number of interior nodes along x. A dense-band Cholesky factor is cheap
//! at the mesh sizes used here and gives deterministic, exact-to-rounding
//! solves.

use crate::error::{AtlasError, Result};

/// Lower band storage: `data[k * (bw + 1) + d]` holds entry `(k, k - d)`.
#[derive(Debug, Clone)]
pub struct SymBand {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl SymBand {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        debug_assert!(col <= row && row - col <= self.bw);
        self.data[row * (self.bw + 1) + (row - col)]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        debug_assert!(col <= row && row - col <= self.bw);
        self.data[row * (self.bw + 1) + (row - col)] = v;
    }

    pub fn add_diagonal(&mut self, diag: &[f64]) {
        for (k, d) in diag.iter().enumerate() {
            self.data[k * (self.bw + 1)] += d;
        }
    }

    /// Symmetric matrix-vector product.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for row in 0..self.n {
            let lo = row.saturating_sub(self.bw);
            let mut acc = self.get(row, row) * x[row];
            for col in lo..row {
                let a = self.get(row, col);
                if a != 0.0 {
                    acc += a * x[col];
                    y[col] += a * x[row];
                }
            }
            y[row] += acc;
        }
        y
    }

    /// In-place Cholesky factorization `A = L Lᵀ`.
    pub fn cholesky(mut self) -> Result<BandCholesky> {
        let bw = self.bw;
        let w = bw + 1;
        for j in 0..self.n {
            let lo = j.saturating_sub(bw);
            let mut d = self.data[j * w];
            for k in lo..j {
                let l = self.data[j * w + (j - k)];
                d -= l * l;
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(AtlasError::NotPositiveDefinite(j));
            }
            let djj = d.sqrt();
            self.data[j * w] = djj;
            let hi = (j + bw).min(self.n - 1);
            for i in (j + 1)..=hi {
                let ilo = i.saturating_sub(bw);
                let mut s = self.data[i * w + (i - j)];
                for k in ilo.max(lo)..j {
                    s -= self.data[i * w + (i - k)] * self.data[j * w + (j - k)];
                }
                self.data[i * w + (i - j)] = s / djj;
            }
        }
        Ok(BandCholesky { factor: self })
    }
}

/// Cholesky factor of a [`SymBand`] matrix.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    factor: SymBand,
}

impl BandCholesky {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let l = &self.factor;
        let n = l.n;
        let bw = l.bw;
        let w = bw + 1;
        let mut y = rhs.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let mut s = y[i];
            for k in lo..i {
                s -= l.data[i * w + (i - k)] * y[k];
            }
            y[i] = s / l.data[i * w];
        }
        for i in (0..n).rev() {
            let hi = (i + bw).min(n - 1);
            let mut s = y[i];
            for k in (i + 1)..=hi {
                s -= l.data[k * w + (k - i)] * y[k];
            }
            y[i] = s / l.data[i * w];
        }
        y
    }
}

/// Gaussian elimination without pivoting on a symmetric band matrix.
///
/// Used for Jacobians that are nonsingular but indefinite (the superlinear
/// normalized problem). Returns `None` on a vanishing pivot.
pub fn band_lu_solve(a: &SymBand, rhs: &[f64]) -> Option<Vec<f64>> {
    let n = a.n;
    let bw = a.bw;
    let width = 2 * bw + 1;
    // full band, column offset: m[i][j - i + bw]
    let mut m = vec![0.0; n * width];
    for i in 0..n {
        let lo = i.saturating_sub(bw);
        for j in lo..=i {
            let v = a.get(i, j);
            m[i * width + (j + bw - i)] = v;
            m[j * width + (i + bw - j)] = v;
        }
    }
    let mut b = rhs.to_vec();
    for k in 0..n {
        let piv = m[k * width + bw];
        if piv.abs() < 1e-300 || !piv.is_finite() {
            return None;
        }
        let hi = (k + bw).min(n - 1);
        for i in (k + 1)..=hi {
            let factor = m[i * width + (k + bw - i)] / piv;
            if factor == 0.0 {
                continue;
            }
            for j in k..=hi {
                m[i * width + (j + bw - i)] -= factor * m[k * width + (j + bw - k)];
            }
            b[i] -= factor * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let hi = (i + bw).min(n - 1);
        let mut s = b[i];
        for j in (i + 1)..=hi {
            s -= m[i * width + (j + bw - i)] * x[j];
        }
        x[i] = s / m[i * width + bw];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize) -> SymBand {
        let mut a = SymBand::zeros(n, 1);
        for i in 0..n {
            a.set(i, i, 2.0);
            if i > 0 {
                a.set(i, i - 1, -1.0);
            }
        }
        a
    }

    #[test]
    fn cholesky_solves_tridiagonal() {
        let a = tridiag(20);
        let x: Vec<f64> = (0..20).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.mul_vec(&x);
        let sol = a.clone().cholesky().unwrap().solve(&b);
        for (u, v) in sol.iter().zip(&x) {
            assert!((u - v).abs() < 1e-12);
        }
        let lu = band_lu_solve(&a, &b).unwrap();
        for (u, v) in lu.iter().zip(&x) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn indefinite_rejected_by_cholesky() {
        let mut a = tridiag(5);
        a.add_diagonal(&[-3.0; 5]);
        assert!(matches!(a.cholesky(), Err(AtlasError::NotPositiveDefinite(_))));
    }
}
