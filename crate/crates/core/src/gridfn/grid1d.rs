use super::analytic::AnalyticFn1D;
use super::interp::lagrange4;
use super::interval::{Interval, Support};
use super::quadrature::simpson_anchored;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Minimum number of samples for any grid function.
pub const MIN_SAMPLES: usize = 8;

const NODE_SLACK: f64 = 1e-9;

/// Uniform grid `x0 + i dx`, `i = 0..n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1 {
    pub x0: f64,
    pub dx: f64,
    pub n: usize,
}

impl Grid1 {
    pub fn new(x0: f64, dx: f64, n: usize) -> Result<Self> {
        if !(dx > 0.0 && dx.is_finite() && x0.is_finite()) {
            return Err(Error::invalid(format!("bad grid: x0 = {x0}, dx = {dx}")));
        }
        if n < MIN_SAMPLES {
            return Err(Error::GridTooSmall { have: n, need: MIN_SAMPLES, what: "grid".into() });
        }
        Ok(Grid1 { x0, dx, n })
    }

    /// Smallest grid with spacing `dx` covering `[lo, hi]` whose nodes include 0
    /// at an even global index (so origin-anchored quadrature panels line up).
    pub fn covering(lo: f64, hi: f64, dx: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::invalid(format!("empty grid range [{lo}, {hi}]")));
        }
        let mut k_lo = (lo / dx - NODE_SLACK).floor() as i64;
        if k_lo.rem_euclid(2) != 0 {
            k_lo -= 1;
        }
        let k_hi = (hi / dx + NODE_SLACK).ceil() as i64;
        let n = (k_hi - k_lo + 1).max(MIN_SAMPLES as i64) as usize;
        Grid1::new(k_lo as f64 * dx, dx, n)
    }

    /// Grid on `[-r, r]` with 0 at an even index.
    pub fn symmetric(r: f64, dx: f64) -> Result<Self> {
        Grid1::covering(-r, r, dx)
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    pub fn last(&self) -> f64 {
        self.x(self.n - 1)
    }

    pub fn extent(&self) -> Interval {
        Interval::new(self.x0, self.last())
    }

    /// Position of `x` in index units.
    pub fn position(&self, x: f64) -> f64 {
        (x - self.x0) / self.dx
    }

    /// Index of the node at `x`, if `x` is a node (up to rounding).
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let u = self.position(x);
        let r = u.round();
        ((u - r).abs() < 1e-7 && r >= 0.0 && (r as usize) < self.n).then_some(r as usize)
    }

    /// Global index of the origin, when 0 sits exactly on a node of the
    /// (infinitely extended) lattice.
    pub fn origin_offset(&self) -> Option<isize> {
        let u = -self.x0 / self.dx;
        let r = u.round();
        ((u - r).abs() < 1e-7).then_some(r as isize)
    }

    /// Inclusive index range of nodes inside `iv`, clipped to the grid.
    pub fn index_range(&self, iv: &Interval) -> Option<(usize, usize)> {
        let lo = (self.position(iv.lo) - NODE_SLACK).ceil().max(0.0);
        let hi = (self.position(iv.hi) + NODE_SLACK).floor().min(self.n as f64 - 1.0);
        (lo <= hi).then_some((lo as usize, hi as usize))
    }

    pub fn same_as(&self, other: &Grid1) -> bool {
        self.n == other.n && (self.dx - other.dx).abs() <= 1e-12 * self.dx && (self.x0 - other.x0).abs() <= 1e-9 * self.dx
    }

    pub(crate) fn check_spacing(&self, other: &Grid1) -> Result<()> {
        if (self.dx - other.dx).abs() > 1e-12 * self.dx {
            return Err(Error::SpacingMismatch(self.dx, other.dx));
        }
        Ok(())
    }
}

/// Sampled function on a uniform 1-D grid, zero outside its declared support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFn1D {
    grid: Grid1,
    samples: Vec<f64>,
    support: Support,
}

impl GridFn1D {
    /// Validating constructor: every sample finite, and exactly zero outside
    /// `support`. The stored support is clipped to the grid extent.
    pub fn new(grid: Grid1, samples: Vec<f64>, support: Support) -> Result<Self> {
        if samples.len() != grid.n {
            return Err(Error::invalid(format!("{} samples for a grid of {}", samples.len(), grid.n)));
        }
        if let Some((i, v)) = samples.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { node: "sample".into(), x: grid.x(i), value: *v });
        }
        let support = support.and_then(|s| s.intersect(&grid.extent()));
        let inside = support.and_then(|s| grid.index_range(&s));
        for (i, v) in samples.iter().enumerate() {
            let ok = match inside {
                Some((lo, hi)) => (lo..=hi).contains(&i),
                None => false,
            };
            if !ok && *v != 0.0 {
                return Err(Error::invalid(format!(
                    "sample {v} at x = {} lies outside the declared support",
                    grid.x(i)
                )));
            }
        }
        Ok(GridFn1D { grid, samples, support })
    }

    /// Constructor that zeroes every sample outside `support`.
    pub fn truncated(grid: Grid1, mut samples: Vec<f64>, support: Support) -> Result<Self> {
        let support = support.and_then(|s| s.intersect(&grid.extent()));
        let inside = support.and_then(|s| grid.index_range(&s));
        for (i, v) in samples.iter_mut().enumerate() {
            if !matches!(inside, Some((lo, hi)) if (lo..=hi).contains(&i)) {
                *v = 0.0;
            }
        }
        GridFn1D::new(grid, samples, support)
    }

    pub fn zeros(grid: Grid1) -> Self {
        GridFn1D { grid, samples: vec![0.0; grid.n], support: None }
    }

    /// Samples of a closed-form function with its certified support.
    pub fn sample(f: &AnalyticFn1D, grid: Grid1) -> Result<Self> {
        GridFn1D::truncated(grid, f.sample(grid.x0, grid.dx, grid.n)?, f.support())
    }

    /// Exact samples of the `order`-th derivative of a closed-form function.
    pub fn sample_derivative(f: &AnalyticFn1D, order: usize, grid: Grid1) -> Result<Self> {
        GridFn1D::truncated(grid, f.sample_derivative(order, grid.x0, grid.dx, grid.n)?, f.support())
    }

    pub fn grid(&self) -> Grid1 {
        self.grid
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn x(&self, i: usize) -> f64 {
        self.grid.x(i)
    }

    /// Inclusive index range of the declared support.
    pub fn support_indices(&self) -> Option<(usize, usize)> {
        self.support.and_then(|s| self.grid.index_range(&s))
    }

    pub fn is_zero(&self) -> bool {
        self.samples.iter().all(|v| *v == 0.0)
    }

    /// Sample at a signed index, zero-extended.
    pub fn at(&self, i: isize) -> f64 {
        if i < 0 || i as usize >= self.samples.len() {
            0.0
        } else {
            self.samples[i as usize]
        }
    }

    /// Cubic interpolation, exact at nodes, zero outside the declared support.
    pub fn eval(&self, x: f64) -> f64 {
        match self.support {
            Some(s) if s.contains(x) => lagrange4(x, self.grid.x0, self.grid.dx, |i| self.at(i)),
            _ => 0.0,
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn l2_norm(&self) -> f64 {
        let sq = self.map(|v| v * v);
        sq.integrate().max(0.0).sqrt()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFn1D {
        let samples = self.samples.iter().map(|v| f(*v)).collect::<Vec<_>>();
        // pointwise maps fixing 0 keep the support
        let support = if f(0.0) == 0.0 { self.support } else { Some(self.grid.extent()) };
        GridFn1D { grid: self.grid, samples, support }
    }

    pub fn scale(&self, c: f64) -> GridFn1D {
        GridFn1D {
            grid: self.grid,
            samples: self.samples.iter().map(|v| c * v).collect(),
            support: if c == 0.0 { None } else { self.support },
        }
    }

    fn check_same_grid(&self, other: &GridFn1D) -> Result<()> {
        self.grid.check_spacing(&other.grid)?;
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch(format!("{:?} vs {:?}", self.grid, other.grid)));
        }
        Ok(())
    }

    pub fn add(&self, other: &GridFn1D) -> Result<GridFn1D> {
        self.check_same_grid(other)?;
        let samples = self.samples.iter().zip(&other.samples).map(|(a, b)| a + b).collect();
        Ok(GridFn1D {
            grid: self.grid,
            samples,
            support: super::interval::hull_opt(self.support, other.support),
        })
    }

    pub fn sub(&self, other: &GridFn1D) -> Result<GridFn1D> {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &GridFn1D) -> Result<GridFn1D> {
        self.check_same_grid(other)?;
        let support = super::interval::intersect_opt(self.support, other.support);
        GridFn1D::truncated(self.grid, self.samples.iter().zip(&other.samples).map(|(a, b)| a * b).collect(), support)
    }

    /// Same samples with the declared support cut down to `keep`.
    pub fn restrict(&self, keep: Interval) -> Result<GridFn1D> {
        let s = self.support.and_then(|s| s.intersect(&keep));
        GridFn1D::truncated(self.grid, self.samples.clone(), s)
    }

    /// Composite Simpson over the support, panels anchored at even global
    /// indices counted from the origin (or from `x0` if 0 is off-lattice).
    pub fn integrate(&self) -> f64 {
        let Some((lo, hi)) = self.support_indices() else { return 0.0 };
        let anchor = self.grid.origin_offset().unwrap_or(0);
        simpson_anchored(lo as isize, hi as isize, anchor, self.grid.dx, |i| self.at(i))
    }

    /// `order`-th derivative by iterating the 4th-order centered stencil with
    /// zero extension. The support grows by `2 dx` per application.
    pub fn derivative(&self, order: usize) -> Result<GridFn1D> {
        if self.len() < order + 4 {
            return Err(Error::GridTooSmall { have: self.len(), need: order + 4, what: format!("derivative of order {order}") });
        }
        let mut cur = self.clone();
        for _ in 0..order {
            cur = cur.first_derivative();
        }
        Ok(cur)
    }

    fn first_derivative(&self) -> GridFn1D {
        let h = self.grid.dx;
        let samples: Vec<f64> = (0..self.len() as isize)
            .map(|i| (-self.at(i + 2) + 8.0 * self.at(i + 1) - 8.0 * self.at(i - 1) + self.at(i - 2)) / (12.0 * h))
            .collect();
        let support = self.support.and_then(|s| s.expand(2.0 * h).intersect(&self.grid.extent()));
        GridFn1D::truncated(self.grid, samples, support).expect("stencil output is finite")
    }

    /// Group convolution on the line, `(f * g)(x) = int f(u) g(x - u) du`,
    /// evaluated on `g`'s grid.
    pub fn convolve(&self, g: &GridFn1D) -> Result<GridFn1D> {
        self.grid.check_spacing(&g.grid)?;
        let grid = g.grid;
        let (Some(sf), Some(sg)) = (self.support, g.support) else { return Ok(GridFn1D::zeros(grid)) };
        let (Some((flo, fhi)), Some(_)) = (self.support_indices(), g.support_indices()) else {
            return Ok(GridFn1D::zeros(grid));
        };
        let out_support = sf.sum(&sg);
        if !grid.extent().contains_interval(&out_support) {
            return Err(Error::SupportEscapes { required: out_support.to_string(), available: grid.extent().to_string() });
        }
        let anchor = self.grid.origin_offset().unwrap_or(0);
        let shift = self.grid.x0 / self.grid.dx;
        let integer_shift = (shift - shift.round()).abs() < 1e-7;
        let dx = grid.dx;
        let (olo, ohi) = grid.index_range(&out_support).expect("support inside grid");
        let mut samples = vec![0.0; grid.n];
        for (j, out) in samples.iter_mut().enumerate().take(ohi + 1).skip(olo) {
            let xj = grid.x(j);
            *out = simpson_anchored(flo as isize, fhi as isize, anchor, dx, |i| {
                let fu = self.at(i);
                if fu == 0.0 {
                    return 0.0;
                }
                if integer_shift {
                    // x_j - u_i lands on g's lattice
                    let k = j as isize - i - shift.round() as isize;
                    fu * g.at(k)
                } else {
                    fu * g.eval(xj - self.grid.x(i.max(0) as usize))
                }
            });
        }
        GridFn1D::truncated(grid, samples, Some(out_support))
    }
}
