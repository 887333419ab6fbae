use super::grid1d::{Grid1, GridFn1D};
use super::interp::{lagrange4, lagrange4_weights};
use super::interval::{Box2, Interval};
use super::quadrature::simpson_anchored;
use crate::error::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Sampled function on a tensor-product grid, row-major with axis 0 outer.
/// Zero outside its declared support box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFn2D {
    grids: [Grid1; 2],
    samples: Vec<f64>,
    support: Option<Box2>,
}

impl GridFn2D {
    pub fn new(grid0: Grid1, grid1: Grid1, samples: Vec<f64>, support: Option<Box2>) -> Result<Self> {
        if samples.len() != grid0.n * grid1.n {
            return Err(Error::invalid(format!("{} samples for a {}x{} grid", samples.len(), grid0.n, grid1.n)));
        }
        if let Some((k, v)) = samples.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite {
                node: "sample".into(),
                x: grid0.x(k / grid1.n),
                value: *v,
            });
        }
        let extent = Box2::new(grid0.extent(), grid1.extent());
        let support = support.and_then(|s| s.intersect(&extent));
        let out = GridFn2D { grids: [grid0, grid1], samples, support };
        let ranges = out.support_indices();
        for i in 0..grid0.n {
            for j in 0..grid1.n {
                let inside = matches!(ranges, Some(((a, b), (c, d))) if a <= i && i <= b && c <= j && j <= d);
                if !inside && out.samples[i * grid1.n + j] != 0.0 {
                    return Err(Error::invalid(format!(
                        "sample at ({}, {}) lies outside the declared support",
                        grid0.x(i),
                        grid1.x(j)
                    )));
                }
            }
        }
        Ok(out)
    }

    /// Constructor that zeroes every sample outside `support`.
    pub fn truncated(grid0: Grid1, grid1: Grid1, mut samples: Vec<f64>, support: Option<Box2>) -> Result<Self> {
        let extent = Box2::new(grid0.extent(), grid1.extent());
        let support = support.and_then(|s| s.intersect(&extent));
        let ranges = support.and_then(|s| Some((grid0.index_range(&s.axis0)?, grid1.index_range(&s.axis1)?)));
        let n1 = grid1.n;
        samples.par_chunks_mut(n1).enumerate().for_each(|(i, row)| {
            for (j, v) in row.iter_mut().enumerate() {
                let inside = matches!(ranges, Some(((a, b), (c, d))) if a <= i && i <= b && c <= j && j <= d);
                if !inside {
                    *v = 0.0;
                }
            }
        });
        GridFn2D::new(grid0, grid1, samples, support)
    }

    pub fn zeros(grid0: Grid1, grid1: Grid1) -> Self {
        GridFn2D { grids: [grid0, grid1], samples: vec![0.0; grid0.n * grid1.n], support: None }
    }

    /// Samples `f(x, y)` on the support box only.
    pub fn from_fn(
        grid0: Grid1,
        grid1: Grid1,
        support: Option<Box2>,
        f: impl Fn(f64, f64) -> f64 + Sync,
    ) -> Result<Self> {
        let extent = Box2::new(grid0.extent(), grid1.extent());
        let support = support.and_then(|s| s.intersect(&extent));
        let ranges = support.and_then(|s| Some((grid0.index_range(&s.axis0)?, grid1.index_range(&s.axis1)?)));
        let mut samples = vec![0.0; grid0.n * grid1.n];
        if let Some(((a, b), (c, d))) = ranges {
            samples.par_chunks_mut(grid1.n).enumerate().for_each(|(i, row)| {
                if i < a || i > b {
                    return;
                }
                let x = grid0.x(i);
                for (j, v) in row.iter_mut().enumerate().take(d + 1).skip(c) {
                    *v = f(x, grid1.x(j));
                }
            });
        }
        GridFn2D::new(grid0, grid1, samples, support)
    }

    /// Tensor product `u(x) v(y)`.
    pub fn outer(u: &GridFn1D, v: &GridFn1D) -> Result<Self> {
        let support = match (u.support(), v.support()) {
            (Some(a), Some(b)) => Some(Box2::new(a, b)),
            _ => None,
        };
        let (g0, g1) = (u.grid(), v.grid());
        let mut samples = vec![0.0; g0.n * g1.n];
        for i in 0..g0.n {
            let ui = u.samples()[i];
            if ui == 0.0 {
                continue;
            }
            for j in 0..g1.n {
                samples[i * g1.n + j] = ui * v.samples()[j];
            }
        }
        GridFn2D::truncated(g0, g1, samples, support)
    }

    pub fn grid(&self, axis: usize) -> Grid1 {
        self.grids[axis]
    }

    pub fn grids(&self) -> (Grid1, Grid1) {
        (self.grids[0], self.grids[1])
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.grids[0].n, self.grids[1].n)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn support(&self) -> Option<Box2> {
        self.support
    }

    pub fn support_indices(&self) -> Option<((usize, usize), (usize, usize))> {
        let s = self.support?;
        Some((self.grids[0].index_range(&s.axis0)?, self.grids[1].index_range(&s.axis1)?))
    }

    pub fn is_zero(&self) -> bool {
        self.samples.iter().all(|v| *v == 0.0)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n1 = self.grids[1].n;
        &self.samples[i * n1..(i + 1) * n1]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.samples[i * self.grids[1].n + j]
    }

    /// Sample at signed indices, zero-extended.
    pub fn at(&self, i: isize, j: isize) -> f64 {
        let (n0, n1) = self.shape();
        if i < 0 || j < 0 || i as usize >= n0 || j as usize >= n1 {
            0.0
        } else {
            self.samples[i as usize * n1 + j as usize]
        }
    }

    /// Bicubic interpolation; exact at nodes, zero outside the support box.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self.support {
            Some(s) if s.contains(x, y) => {}
            _ => return 0.0,
        }
        let u = self.grids[0].position(x);
        let i = u.floor();
        let s = u - i;
        let i = i as isize;
        if s == 0.0 {
            return self.eval_row(i, y);
        }
        let (wm, w0, w1, w2) = lagrange4_weights(s);
        wm * self.eval_row(i - 1, y) + w0 * self.eval_row(i, y) + w1 * self.eval_row(i + 1, y) + w2 * self.eval_row(i + 2, y)
    }

    /// Cubic interpolation along axis 1 within row `i` (zero-extended rows).
    pub fn eval_row(&self, i: isize, y: f64) -> f64 {
        let g1 = self.grids[1];
        lagrange4(y, g1.x0, g1.dx, |j| self.at(i, j))
    }

    /// Cubic interpolation along axis 1 within row `i`, zero outside the
    /// declared support along axis 1.
    pub fn eval_in_row(&self, i: usize, y: f64) -> f64 {
        match self.support {
            Some(s) if s.axis1.contains(y) => self.eval_row(i as isize, y),
            _ => 0.0,
        }
    }

    pub fn transpose(&self) -> GridFn2D {
        let (n0, n1) = self.shape();
        let mut samples = vec![0.0; n0 * n1];
        for i in 0..n0 {
            for j in 0..n1 {
                samples[j * n0 + i] = self.samples[i * n1 + j];
            }
        }
        GridFn2D { grids: [self.grids[1], self.grids[0]], samples, support: self.support.map(|s| s.transpose()) }
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Double integral by tensor Simpson, panels anchored as in 1-D.
    pub fn integrate(&self) -> f64 {
        let Some(((a, b), (c, d))) = self.support_indices() else { return 0.0 };
        let [g0, g1] = self.grids;
        let an0 = g0.origin_offset().unwrap_or(0);
        let an1 = g1.origin_offset().unwrap_or(0);
        simpson_anchored(a as isize, b as isize, an0, g0.dx, |i| {
            simpson_anchored(c as isize, d as isize, an1, g1.dx, |j| self.at(i, j))
        })
    }

    pub fn l2_norm(&self) -> f64 {
        self.map(|v| v * v).integrate().max(0.0).sqrt()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync) -> GridFn2D {
        let samples: Vec<f64> = self.samples.par_iter().map(|v| f(*v)).collect();
        let extent = Box2::new(self.grids[0].extent(), self.grids[1].extent());
        let support = if f(0.0) == 0.0 { self.support } else { Some(extent) };
        GridFn2D { grids: self.grids, samples, support }
    }

    pub fn scale(&self, c: f64) -> GridFn2D {
        GridFn2D {
            grids: self.grids,
            samples: self.samples.iter().map(|v| c * v).collect(),
            support: if c == 0.0 { None } else { self.support },
        }
    }

    pub fn check_same_grid(&self, other: &GridFn2D) -> Result<()> {
        for a in 0..2 {
            self.grids[a].check_spacing(&other.grids[a])?;
            if !self.grids[a].same_as(&other.grids[a]) {
                return Err(Error::GridMismatch(format!("axis {a}: {:?} vs {:?}", self.grids[a], other.grids[a])));
            }
        }
        Ok(())
    }

    pub fn add(&self, other: &GridFn2D) -> Result<GridFn2D> {
        self.check_same_grid(other)?;
        let samples = self.samples.iter().zip(&other.samples).map(|(a, b)| a + b).collect();
        let support = match (self.support, other.support) {
            (Some(a), Some(b)) => Some(a.hull(&b)),
            (a, b) => a.or(b),
        };
        Ok(GridFn2D { grids: self.grids, samples, support })
    }

    pub fn sub(&self, other: &GridFn2D) -> Result<GridFn2D> {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &GridFn2D) -> Result<GridFn2D> {
        self.check_same_grid(other)?;
        let support = match (self.support, other.support) {
            (Some(a), Some(b)) => a.intersect(&b),
            _ => None,
        };
        let samples = self.samples.iter().zip(&other.samples).map(|(a, b)| a * b).collect();
        GridFn2D::truncated(self.grids[0], self.grids[1], samples, support)
    }

    /// Pointwise product with `w(x, y)`, keeping the support.
    pub fn weighted(&self, w: impl Fn(f64, f64) -> f64 + Sync) -> Result<GridFn2D> {
        let [g0, g1] = self.grids;
        let mut samples = self.samples.clone();
        samples.par_chunks_mut(g1.n).enumerate().for_each(|(i, row)| {
            let x = g0.x(i);
            for (j, v) in row.iter_mut().enumerate() {
                if *v != 0.0 {
                    *v *= w(x, g1.x(j));
                }
            }
        });
        GridFn2D::new(g0, g1, samples, self.support)
    }

    /// Same samples with the support cut down to `keep`.
    pub fn restrict(&self, keep: Box2) -> Result<GridFn2D> {
        let s = self.support.and_then(|s| s.intersect(&keep));
        GridFn2D::truncated(self.grids[0], self.grids[1], self.samples.clone(), s)
    }

    /// Declared support replaced by a larger box (samples unchanged).
    pub fn with_support(&self, support: Option<Box2>) -> Result<GridFn2D> {
        GridFn2D::new(self.grids[0], self.grids[1], self.samples.clone(), support)
    }

    /// `order`-th partial derivative along `axis` by the iterated 4th-order
    /// stencil; support grows by `2 dx` per order along that axis.
    pub fn derivative(&self, axis: usize, order: usize) -> Result<GridFn2D> {
        let n = self.grids[axis].n;
        if n < order + 4 {
            return Err(Error::GridTooSmall { have: n, need: order + 4, what: format!("derivative of order {order}") });
        }
        let mut cur = self.clone();
        for _ in 0..order {
            cur = cur.first_derivative(axis);
        }
        Ok(cur)
    }

    fn first_derivative(&self, axis: usize) -> GridFn2D {
        let [g0, g1] = self.grids;
        let h = self.grids[axis].dx;
        let n1 = g1.n;
        let mut samples = vec![0.0; self.samples.len()];
        samples.par_chunks_mut(n1).enumerate().for_each(|(i, row)| {
            let i = i as isize;
            for (j, v) in row.iter_mut().enumerate() {
                let j = j as isize;
                let f = |d: isize| if axis == 0 { self.at(i + d, j) } else { self.at(i, j + d) };
                *v = (-f(2) + 8.0 * f(1) - 8.0 * f(-1) + f(-2)) / (12.0 * h);
            }
        });
        let extent = Box2::new(g0.extent(), g1.extent());
        let support = self
            .support
            .map(|s| s.with_axis(axis, s.axis(axis).expand(2.0 * h)))
            .and_then(|s| s.intersect(&extent));
        GridFn2D::truncated(g0, g1, samples, support).expect("stencil output is finite")
    }

    /// `sup` over the other axis for each node of `axis`.
    pub fn axis_sup_profile(&self, axis: usize) -> Vec<f64> {
        let (n0, n1) = self.shape();
        if axis == 0 {
            (0..n0).map(|i| self.row(i).iter().fold(0.0, |m: f64, v| m.max(v.abs()))).collect()
        } else {
            let mut p = vec![0.0f64; n1];
            for i in 0..n0 {
                for (pj, v) in p.iter_mut().zip(self.row(i)) {
                    *pj = pj.max(v.abs());
                }
            }
            p
        }
    }

    /// Restriction to the row nearest `x` along axis 0.
    pub fn slice_axis0(&self, x: f64) -> Result<GridFn1D> {
        let i = self.grids[0]
            .index_of(x)
            .ok_or_else(|| Error::invalid(format!("{x} is not a node of axis 0")))?;
        let support = match self.support {
            Some(s) if s.axis0.contains(x) => Some(s.axis1),
            _ => None,
        };
        GridFn1D::truncated(self.grids[1], self.row(i).to_vec(), support)
    }

    /// Support box as intervals (for diagnostics).
    pub fn support_axis(&self, axis: usize) -> Option<Interval> {
        self.support.map(|s| s.axis(axis))
    }
}
