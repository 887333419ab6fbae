use super::order::order_of_1d;
use crate::error::{Error, Result};
use crate::gridfn::interp::Pchip;
use crate::gridfn::{AnalyticFn1D, Grid1, GridFn1D};

/// Width of the one-sided mollifier.
pub const MOLLIFIER_WIDTH: f64 = 1.0;
/// Highest moment `s^j` controlled by the diagonal weights.
pub const ENVELOPE_MOMENTS: i32 = 8;

fn full_support(grid: Grid1, samples: &[f64]) -> Option<crate::gridfn::Interval> {
    samples.iter().any(|v| *v != 0.0).then(|| grid.extent())
}

/// Non-increasing smooth majorant of `|f|` on a half-line grid: the suffix
/// maximum averaged over `[t - w, t]`, held constant below the first node.
pub fn schwartz_envelope(f: &GridFn1D) -> Result<GridFn1D> {
    let grid = f.grid();
    let n = grid.n;
    let mut m = vec![0.0f64; n];
    let mut run = 0.0f64;
    for i in (0..n).rev() {
        run = run.max(f.samples()[i].abs());
        m[i] = run;
    }
    let k = (MOLLIFIER_WIDTH / grid.dx).round() as usize;
    let weights: Vec<f64> = if k < 2 {
        vec![1.0]
    } else {
        let b = AnalyticFn1D::bump();
        let raw: Vec<f64> = (0..=k).map(|j| b.eval(2.0 * j as f64 / k as f64 - 1.0)).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / total).collect()
    };
    let mut g = vec![0.0; n];
    for i in 0..n {
        let mut acc = 0.0;
        for (j, w) in weights.iter().enumerate() {
            if *w != 0.0 {
                acc += w * m[i.saturating_sub(j)];
            }
        }
        g[i] = acc.max(m[i]);
        // rounding can only break monotonicity by an ulp; g_{i-1} >= m_{i-1} >= m_i
        if i > 0 && g[i] > g[i - 1] {
            g[i] = g[i - 1];
        }
    }
    GridFn1D::new(grid, g.clone(), full_support(grid, &g))
}

/// `F(s) = f(1/s)` resampled onto `target` by monotone cubic interpolation.
pub fn resample_inverted(f: &GridFn1D, target: Grid1) -> Result<GridFn1D> {
    let grid = f.grid();
    if grid.x0 <= 0.0 || target.x0 <= 0.0 {
        return Err(Error::invalid(format!("inversion needs a strictly positive domain, got {}", grid.extent())));
    }
    let xs: Vec<f64> = (0..grid.n).rev().map(|i| 1.0 / grid.x(i)).collect();
    let ys: Vec<f64> = f.samples().iter().rev().copied().collect();
    let p = Pchip::new(xs, ys)?;
    let out: Vec<f64> = (0..target.n).map(|i| p.eval(target.x(i))).collect();
    GridFn1D::new(target, out.clone(), full_support(target, &out))
}

/// The inversion `t |-> 1/t`: a function on `[a, b]`, `a > 0`, becomes one on
/// `[1/b, 1/a]` sampled at `n` uniform nodes.
pub fn invert_axis(f: &GridFn1D, n: usize) -> Result<GridFn1D> {
    let grid = f.grid();
    if grid.x0 <= 0.0 {
        return Err(Error::invalid(format!("inversion needs a strictly positive domain, got {}", grid.extent())));
    }
    let (lo, hi) = (1.0 / grid.last(), 1.0 / grid.x0);
    let target = Grid1::new(lo, (hi - lo) / (n as f64 - 1.0), n)?;
    resample_inverted(f, target)
}

/// A single function `g` on the grid of the family, flat at 0, with
/// `f_k / g -> 0` toward 0 for every member. Built on the inverted axis from
/// the envelopes of the members with diagonal weights.
pub fn flat_envelope(family: &[GridFn1D], inverted_nodes: usize) -> Result<GridFn1D> {
    let Some(first) = family.first() else { return Err(Error::invalid("empty family")) };
    let grid = first.grid();
    for (k, f) in family.iter().enumerate() {
        if !f.grid().same_as(&grid) {
            return Err(Error::GridMismatch(format!("member {k} lives on a different grid")));
        }
        let est = order_of_1d(f)?;
        if !est.flat_flag {
            return Err(Error::NotFlat { measured: est.p_hat });
        }
    }
    let mut total: Option<GridFn1D> = None;
    let mut weight = 1.0;
    for f in family {
        let env = schwartz_envelope(&invert_axis(f, inverted_nodes)?)?;
        let sg = env.map_with_x(|s, v| s * v);
        let moment = (0..=ENVELOPE_MOMENTS)
            .map(|j| sg.samples().iter().enumerate().map(|(i, v)| sg.x(i).powi(j) * v).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        let term = sg.scale(weight / (1.0 + moment));
        total = Some(match total {
            None => term,
            Some(acc) => acc.add(&term)?,
        });
        weight *= 0.5;
    }
    resample_inverted(&total.expect("family is non-empty"), grid)
}

impl GridFn1D {
    /// `v(x) |-> w(x, v(x))`, keeping the declared support.
    pub fn map_with_x(&self, w: impl Fn(f64, f64) -> f64) -> GridFn1D {
        let samples: Vec<f64> = self.samples().iter().enumerate().map(|(i, v)| if *v == 0.0 { 0.0 } else { w(self.x(i), *v) }).collect();
        GridFn1D::truncated(self.grid(), samples, self.support()).expect("finite map of finite samples")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_of_zero_is_zero() {
        let g = Grid1::new(1.0, 0.01, 500).unwrap();
        let z = GridFn1D::zeros(g);
        assert!(schwartz_envelope(&z).unwrap().is_zero());
    }

    #[test]
    fn envelope_dominates_and_decreases() {
        let g = Grid1::new(1.0, 0.01, 1000).unwrap();
        let s: Vec<f64> = g.xs().iter().map(|t| (-t).exp() * (3.0 * t).cos()).collect();
        let f = GridFn1D::new(g, s, Some(g.extent())).unwrap();
        let e = schwartz_envelope(&f).unwrap();
        for i in 0..g.n {
            assert!(e.samples()[i] >= f.samples()[i].abs());
            if i > 0 {
                assert!(e.samples()[i] <= e.samples()[i - 1]);
            }
        }
    }

    #[test]
    fn inversion_rejects_zero() {
        let g = Grid1::new(0.0, 0.01, 100).unwrap();
        assert!(invert_axis(&GridFn1D::zeros(g), 100).is_err());
    }
}
