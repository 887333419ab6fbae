//! Composite quadrature rules on uniform grids and Gauss-Legendre nodes.

use std::sync::OnceLock;

/// Composite Simpson sum of `f(i)` over global grid indices `lo..=hi`, times `dx`.
///
/// Panels start at indices congruent to `anchor` mod 2, so a kink at an anchored
/// node is always a panel boundary. The range is widened by at most one index on
/// each side to align panels; `f` must return zero there when the integrand is
/// zero-extended.
pub fn simpson_anchored(lo: isize, hi: isize, anchor: isize, dx: f64, mut f: impl FnMut(isize) -> f64) -> f64 {
    if hi < lo {
        return 0.0;
    }
    let mut start = lo;
    if (start - anchor).rem_euclid(2) != 0 {
        start -= 1;
    }
    let mut end = hi;
    if (end - start).rem_euclid(2) != 0 {
        end += 1;
    }
    if end == start {
        return 0.0;
    }
    let mut acc = f(start) + f(end);
    let mut i = start + 1;
    while i < end {
        let w = if (i - start) % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(i);
        i += 1;
    }
    acc * dx / 3.0
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Cached 16-point rule.
pub(crate) fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

/// Composite Gauss-Legendre over `[a, b]` with `panels` equal panels.
pub fn gauss_composite(a: f64, b: f64, panels: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let (nodes, weights) = gl16();
    let h = (b - a) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        let mut s = 0.0;
        for (x, w) in nodes.iter().zip(weights) {
            s += w * f(mid + 0.5 * h * x);
        }
        acc += 0.5 * h * s;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // degree 15 is the limit for 8 nodes
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn simpson_on_cubic_is_exact() {
        let dx = 0.1;
        let s = simpson_anchored(0, 10, 0, dx, |i| {
            let x = i as f64 * dx;
            x * x * x
        });
        assert!((s - 0.25).abs() < 1e-13);
    }

    #[test]
    fn simpson_anchor_widens_range_with_zero_padding() {
        // odd range widened to panels [0, 2], ..., [8, 10]
        let f = |i: isize| if (1..=9).contains(&i) { i as f64 } else { 0.0 };
        let s = simpson_anchored(1, 9, 0, 1.0, f);
        let expected: f64 = (1..=9).map(|i| if i % 2 == 1 { 4.0 } else { 2.0 } * i as f64).sum::<f64>() / 3.0;
        assert!((s - expected).abs() < 1e-12);
    }
}
