//! Local interpolation on uniform grids and monotone cubic interpolation.

use crate::error::{Error, Result};

/// Cubic Lagrange interpolation through the four nodes around `x`.
///
/// `value(i)` returns the sample at global index `i` and must zero-extend.
/// Exact at nodes.
pub fn lagrange4(x: f64, x0: f64, dx: f64, value: impl Fn(isize) -> f64) -> f64 {
    let u = (x - x0) / dx;
    let i = u.floor();
    let s = u - i;
    let i = i as isize;
    if s == 0.0 {
        return value(i);
    }
    let (wm, w0, w1, w2) = lagrange4_weights(s);
    wm * value(i - 1) + w0 * value(i) + w1 * value(i + 1) + w2 * value(i + 2)
}

/// Weights for nodes `-1, 0, 1, 2` at fractional offset `s` in `[0, 1)`.
pub fn lagrange4_weights(s: f64) -> (f64, f64, f64, f64) {
    let wm = -s * (s - 1.0) * (s - 2.0) / 6.0;
    let w0 = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
    let w1 = -(s + 1.0) * s * (s - 2.0) / 2.0;
    let w2 = (s + 1.0) * s * (s - 1.0) / 6.0;
    (wm, w0, w1, w2)
}

/// Piecewise cubic Hermite interpolant with Fritsch-Carlson slopes.
///
/// Preserves monotonicity and sign of the data; constant extension outside.
#[derive(Clone, Debug)]
pub struct Pchip {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl Pchip {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n != ys.len() || n < 2 {
            return Err(Error::invalid("pchip needs at least two matching samples"));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("pchip abscissae must be strictly increasing"));
        }
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
        let mut slopes = vec![0.0; n];
        if n == 2 {
            slopes[0] = delta[0];
            slopes[1] = delta[0];
        } else {
            for i in 1..n - 1 {
                if delta[i - 1] * delta[i] > 0.0 {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    slopes[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
                }
            }
            slopes[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            slopes[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Ok(Pchip { xs, ys, slopes })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let k = self.xs.partition_point(|&v| v <= x) - 1;
        let h = self.xs[k + 1] - self.xs[k];
        let t = (x - self.xs[k]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[k] + h10 * h * self.slopes[k] + h01 * self.ys[k + 1] + h11 * h * self.slopes[k + 1]
    }
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() || d0 == 0.0 {
        0.0
    } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}
