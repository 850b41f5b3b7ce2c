//! Scalar root bracketing and one-dimensional maximization helpers.

/// Bisection on a bracket `[lo, hi]` where `f(lo)` and `f(hi)` have opposite
/// signs (zero counts as either). Stops when the bracket width falls below
/// `xtol` or after 200 halvings. Returns the final bracket.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, xtol: f64) -> (f64, f64) {
    let mut flo = f(lo);
    if flo == 0.0 {
        return (lo, lo);
    }
    for _ in 0..200 {
        if (hi - lo).abs() <= xtol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return (mid, mid);
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Golden-section search for a maximum of a unimodal function on `[a, b]`.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..300 {
        if (b - a).abs() <= xtol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Maximum of `f` over `[a, b]`: dense scan on `n` uniform cells followed by
/// golden-section refinement around the best grid node.
pub fn dense_max<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize) -> (f64, f64) {
    let n = n.max(2);
    let h = (b - a) / n as f64;
    let mut best = (a, f(a));
    for k in 1..=n {
        let x = if k == n { b } else { a + h * k as f64 };
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    let lo = (best.0 - h).max(a);
    let hi = (best.0 + h).min(b);
    let refined = golden_max(&mut f, lo, hi, 1e-13 * (1.0 + best.0.abs()));
    if refined.1 > best.1 {
        refined
    } else {
        best
    }
}

/// Minimum counterpart of [`dense_max`].
pub fn dense_min<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize) -> (f64, f64) {
    let (x, v) = dense_max(|x| -f(x), a, b, n);
    (x, -v)
}

/// Uniformly spaced points including both endpoints.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let h = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|k| if k == n - 1 { b } else { a + h * k as f64 })
        .collect()
}

/// Geometrically spaced points including both endpoints (`a, b > 0`).
pub fn geomspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let mut g: Vec<f64> = linspace(a.ln(), b.ln(), n).into_iter().map(f64::exp).collect();
    g[0] = a;
    if n > 1 {
        g[n - 1] = b;
    }
    g
}

/// Sup norm.
pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Sup norm of a difference.
pub fn dist_inf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt_two() {
        let (lo, hi) = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14);
        assert!((0.5 * (lo + hi) - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn dense_max_of_sine() {
        let (x, v) = dense_max(f64::sin, 0.0, std::f64::consts::PI, 64);
        assert!((x - std::f64::consts::FRAC_PI_2).abs() < 1e-7);
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn geomspace_endpoints_exact() {
        let g = geomspace(1e-3, 10.0, 5);
        assert_eq!(g.len(), 5);
        assert!((g[0] - 1e-3).abs() < 1e-18);
        assert_eq!(g[4], 10.0);
    }
}
