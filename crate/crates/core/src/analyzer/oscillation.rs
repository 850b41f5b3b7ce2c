//! Multiplicity from the oscillation of `H(α) = a(α) Q⁻¹(α)`.
//!
//! For a monotone `Q`, `P(α) < α` exactly when `λ < H(α)`, so every local
//! maximum of `H` above `λ` and local minimum below it forces a pair of
//! fixed points. With `M` the smallest local maximum and `m` the largest
//! local minimum, every `λ ∈ (m, M)` gives at least `2j` fixed points, `j`
//! being the number of local maxima.

use super::Analyzer;
use crate::error::{AtlasError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct OscillationReport {
    pub window: usize,
    pub alphas: Vec<f64>,
    pub h: Vec<f64>,
    pub maximizers: Vec<f64>,
    pub minimizers: Vec<f64>,
    /// `sup H` over local minimizers (at least `0`, the boundary value).
    pub m: f64,
    /// `inf H` over local maximizers.
    pub big_m: f64,
    pub j: usize,
    /// `(λ, fixed-point count)` per probe.
    pub counts: Vec<(f64, usize)>,
}

impl OscillationReport {
    /// Every probe strictly inside `(m, M)` reached `2j` fixed points.
    pub fn bound_holds(&self) -> bool {
        self.counts
            .iter()
            .filter(|(l, _)| *l > self.m && *l < self.big_m)
            .all(|&(_, c)| c >= 2 * self.j)
    }
}

/// Indices of strict local extrema of `v`. Runs touching either end are not
/// extrema; a plateau of equal values counts once, at its midpoint.
pub(crate) fn local_extrema(v: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut k = 0;
    while k < v.len() {
        let start = k;
        while k + 1 < v.len() && v[k + 1] == v[start] {
            k += 1;
        }
        runs.push((start, k));
        k += 1;
    }
    let (mut maxs, mut mins) = (Vec::new(), Vec::new());
    for r in 1..runs.len().saturating_sub(1) {
        let (s, e) = runs[r];
        let here = v[s];
        let (left, right) = (v[runs[r - 1].1], v[runs[r + 1].0]);
        let mid = (s + e) / 2;
        if here > left && here > right {
            maxs.push(mid);
        } else if here < left && here < right {
            mins.push(mid);
        }
    }
    (maxs, mins)
}

impl Analyzer {
    /// Sample `H` on the window, extract `m`, `M`, `j`, and count fixed
    /// points at each probe `λ` (five evenly spaced probes in `(m, M)` when
    /// none are given).
    pub fn oscillation_analysis(&self, i: usize, probes: &[f64]) -> Result<OscillationReport> {
        let w = self.window(i)?;
        if !self.table.is_monotone() {
            let (a, b) = self.table.certify_monotone().violation.unwrap_or((0, 0));
            return Err(AtlasError::NotMonotone(a, b));
        }
        let n = self.opts.oscillation_samples.max(16);
        let alphas: Vec<f64> = (1..=n).map(|k| w.lo + w.width() * k as f64 / (n + 1) as f64).collect();
        let h = alphas.iter().map(|&a| self.h_value(a)).collect::<Result<Vec<_>>>()?;
        let (maxs, mins) = local_extrema(&h);
        let maximizers: Vec<f64> = maxs.iter().map(|&k| alphas[k]).collect();
        let minimizers: Vec<f64> = mins.iter().map(|&k| alphas[k]).collect();
        let big_m = maxs.iter().map(|&k| h[k]).fold(f64::INFINITY, f64::min);
        let m = mins.iter().map(|&k| h[k]).fold(0.0, f64::max);
        let j = maxs.len();
        if j == 0 || !(m < big_m) {
            return Err(AtlasError::NoMultiplicityGap {
                m,
                big_m: if j == 0 { m } else { big_m },
            });
        }
        let probes: Vec<f64> = if probes.is_empty() {
            (1..=5).map(|k| m + (big_m - m) * k as f64 / 6.0).collect()
        } else {
            probes.to_vec()
        };
        let counts = probes
            .iter()
            .map(|&l| Ok((l, self.find_fixed_points(i, l)?.len())))
            .collect::<Result<Vec<_>>>()?;
        Ok(OscillationReport {
            window: i,
            alphas,
            h,
            maximizers,
            minimizers,
            m,
            big_m,
            j,
            counts,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateaus_count_once() {
        let v = [0.0, 1.0, 2.0, 2.0, 2.0, 1.0, 0.5, 0.5, 1.0, 3.0, 0.0];
        let (maxs, mins) = local_extrema(&v);
        assert_eq!(maxs, vec![3, 9]);
        assert_eq!(mins, vec![6]);
        let flat = [0.0, 1.0, 1.0, 1.0];
        assert_eq!(local_extrema(&flat), (vec![], vec![]));
    }
}
