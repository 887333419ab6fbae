use crate::error::{Error, Result};
use crate::gridfn::quadrature::{gauss_composite, simpson_anchored};
use crate::gridfn::{Box2, Grid1, GridFn2D, Interval};
use crate::groupoid::{FlowField, GroupoidInstance, InstanceKind};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Chart window `W = (-eps, eps) x U` in coordinates `(t, b)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartWindow {
    pub eps: f64,
    pub base: Interval,
}

impl ChartWindow {
    pub fn contains(&self, t: f64, b: f64) -> bool {
        t.abs() < self.eps && self.base.lo < b && b < self.base.hi
    }
}

/// A function on the chart `R x B`, with a certified support box in `(t, b)`.
pub struct ChartFn<'a> {
    pub f: &'a (dyn Fn(f64, f64) -> f64 + Sync),
    pub support: Box2,
}

/// Transfer of functions on the chart `(t, b)` to functions on arrows through
/// `u(t, b) = e^{tX} 1_b`, normalized so that the groupoid representation of
/// the transferred function equals the chart representation.
#[derive(Clone, Debug)]
pub struct ChartTransfer {
    pub kind: InstanceKind,
    pub window: ChartWindow,
    frame: FlowField,
    /// Smallest Jacobian factor found on the window grid.
    pub rho_min: f64,
}

/// Checks that `u` is injective on the window (monotone fibers) with a
/// positive Jacobian factor.
pub fn build_chart_transfer(g: &GroupoidInstance, window: ChartWindow) -> Result<ChartTransfer> {
    let eps = window.eps;
    if !(eps > 0.0 && eps <= g.flow.t_max()) {
        return Err(Error::invalid(format!("chart half-width {eps} must lie in (0, t_max]")));
    }
    let frame = match g.kind {
        InstanceKind::Line => FlowField::translation(g.flow.t_max()),
        _ => g.flow.clone(),
    };
    let mut ct = ChartTransfer { kind: g.kind, window, frame, rho_min: f64::INFINITY };
    if g.kind != InstanceKind::Line && !g.base.contains_interval(&window.base) {
        return Err(Error::invalid(format!("chart base {} leaves the base box {}", window.base, g.base)));
    }
    let samples_t = 64;
    let bs: Vec<f64> = match g.kind {
        InstanceKind::Line => vec![0.0],
        _ => g.base_grid.xs().into_iter().filter(|b| window.base.contains(*b)).collect(),
    };
    let mut rho_min = f64::INFINITY;
    for &b in &bs {
        let mut prev: Option<f64> = None;
        let mut dir = 0.0;
        for i in 0..=samples_t {
            let t = -eps + 2.0 * eps * i as f64 / samples_t as f64;
            let c = ct.fiber_coordinate(t, b)?;
            if let Some(p) = prev {
                let d = (c - p).signum();
                if c == p || (dir != 0.0 && d != dir) {
                    return Err(Error::NotInjective { eps });
                }
                dir = d;
            }
            prev = Some(c);
            rho_min = rho_min.min(ct.rho(t, b)?);
        }
    }
    if !(rho_min > 0.0) {
        return Err(Error::NotInjective { eps });
    }
    ct.rho_min = rho_min;
    Ok(ct)
}

impl ChartTransfer {
    /// Arrow `u(t, b)`.
    pub fn u(&self, t: f64, b: f64) -> Result<(f64, f64)> {
        match self.kind {
            InstanceKind::Line => Ok((t, 0.0)),
            InstanceKind::Transformation => Ok((t, b)),
            InstanceKind::Pair => Ok((b, self.frame.flow(t, b)?)),
        }
    }

    /// Coordinate of `u(t, b)` along the source fiber through `1_b`.
    fn fiber_coordinate(&self, t: f64, b: f64) -> Result<f64> {
        match self.kind {
            InstanceKind::Pair => self.frame.flow(t, b),
            _ => Ok(t),
        }
    }

    /// Chart coordinates of an arrow, if the frame flow connects its ends.
    pub fn u_inv(&self, arrow: (f64, f64)) -> Option<(f64, f64)> {
        match self.kind {
            InstanceKind::Line => Some((arrow.0, 0.0)),
            InstanceKind::Transformation => Some(arrow),
            InstanceKind::Pair => {
                let (w, y) = arrow;
                if let Some(c) = self.frame.constant_speed() {
                    return (c != 0.0).then(|| ((y - w) / c, w));
                }
                // time to flow from w to y is the integral of 1 / V
                let a = self.frame.field();
                let panels = (((y - w).abs() / 0.05).ceil() as usize).max(1);
                let mut bad = false;
                let t = gauss_composite(w, y, panels, |z| {
                    let v = a.eval(z);
                    if v == 0.0 {
                        bad = true;
                        return 0.0;
                    }
                    1.0 / v
                });
                (!bad && t.is_finite()).then_some((t, w))
            }
        }
    }

    /// Jacobian factor relating Lebesgue measure on the fiber to `dt`,
    /// evaluated at `iota(t, b) = (-t, u-target)`, by differences of the flow.
    pub fn rho(&self, t: f64, b: f64) -> Result<f64> {
        match self.kind {
            InstanceKind::Pair => {
                let c = self.frame.flow(t, b)?;
                Ok(self.frame.time_derivative(-t, c)?.abs())
            }
            _ => Ok(1.0),
        }
    }

    /// `theta(f)` at an arrow: `f(t, b) / rho` at its chart preimage, zero off the window.
    pub fn theta_eval(&self, f: &ChartFn, arrow: (f64, f64)) -> Result<f64> {
        match self.u_inv(arrow) {
            Some((t, b)) if self.window.contains(t, b) && f.support.contains(t, b) => {
                let v = (f.f)(t, b);
                if v == 0.0 {
                    return Ok(0.0);
                }
                Ok(v / self.rho(t, b)?)
            }
            _ => Ok(0.0),
        }
    }

    /// Box containing `u(supp f)`.
    pub fn image_box(&self, support: Box2) -> Result<Box2> {
        let (ts, bs) = (support.axis0, support.axis1);
        match self.kind {
            InstanceKind::Pair => {
                let ends = [
                    self.frame.flow(ts.lo, bs.lo)?,
                    self.frame.flow(ts.hi, bs.lo)?,
                    self.frame.flow(ts.lo, bs.hi)?,
                    self.frame.flow(ts.hi, bs.hi)?,
                ];
                let lo = ends.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = ends.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                Ok(Box2::new(bs, Interval::new(lo, hi)))
            }
            _ => Ok(support),
        }
    }

    /// `theta(f)` sampled on the arrow grid of `g`.
    pub fn theta(&self, g: &GroupoidInstance, f: &ChartFn) -> Result<GridFn2D> {
        let (g0, g1) = g.arrow_grids()?;
        let window_box = Box2::new(Interval::symmetric(self.window.eps), self.window.base);
        let Some(s) = f.support.intersect(&window_box) else { return Ok(GridFn2D::zeros(g0, g1)) };
        let image = self.image_box(s)?;
        let extent = Box2::new(g0.extent(), g1.extent());
        if !extent.contains_box(&image) {
            return Err(Error::SupportEscapes { required: format!("{image:?}"), available: format!("{extent:?}") });
        }
        let err = std::sync::Mutex::new(None);
        let out = GridFn2D::from_fn(g0, g1, Some(image), |x, y| match self.theta_eval(f, (x, y)) {
            Ok(v) => v,
            Err(e) => {
                *err.lock().expect("poisoned") = Some(e);
                0.0
            }
        })?;
        match err.into_inner().expect("poisoned") {
            Some(e) => Err(e),
            None => Ok(out),
        }
    }

    /// `max |theta(f)(u(t, b)) rho(iota(t, b)) - f(t, b)|` over `(t, b)` nodes in the window.
    pub fn identity_defect(&self, f: &ChartFn, tgrid: Grid1, bgrid: Grid1) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for t in tgrid.xs() {
            for b in bgrid.xs() {
                if !self.window.contains(t, b) {
                    continue;
                }
                let lhs = self.theta_eval(f, self.u(t, b)?)? * self.rho(t, b)?;
                let rhs = if f.support.contains(t, b) { (f.f)(t, b) } else { 0.0 };
                worst = worst.max((lhs - rhs).abs());
            }
        }
        Ok(worst)
    }
}

/// Chart representation on `G` acting on itself:
/// `(pi~(f) psi)(m) = int f(s, t(e^{-sX} m)) psi(e^{-sX} m) ds`,
/// with `f` evaluated in closed form (no interpolation of `f`).
pub fn pi_tilde(g: &GroupoidInstance, f: &ChartFn, psi: &GridFn2D) -> Result<GridFn2D> {
    let (g0, g1) = g.arrow_grids()?;
    let zeros = GridFn2D::zeros(g0, g1);
    let Some(sp) = psi.support() else { return Ok(zeros) };
    let sf = f.support;
    match g.kind {
        InstanceKind::Line => Err(Error::invalid("the line group has no chart representation")),
        InstanceKind::Transformation => {
            let tg = g0;
            let dt = tg.dx;
            let origin = tg.origin_offset().ok_or_else(|| Error::invalid("time grid must contain 0"))?;
            let out_t = sp.axis0.sum(&sf.axis0);
            if !tg.extent().contains_interval(&out_t) {
                return Err(Error::SupportEscapes { required: format!("t in {out_t}"), available: format!("t in {}", tg.extent()) });
            }
            // kernel nodes s_i = (i - origin) dt on the time lattice
            let (Some((ilo, ihi)), Some((jlo, jhi)), Some((llo, lhi))) =
                (tg.index_range(&sf.axis0), tg.index_range(&out_t), g1.index_range(&sp.axis1))
            else {
                return Ok(zeros);
            };
            let k_lo = (jlo as isize - ihi as isize - 1).min(0);
            let k_hi = (jhi as isize - ilo as isize + 1).max(0);
            let cols: Vec<(usize, Vec<f64>)> = (llo..=lhi)
                .into_par_iter()
                .map(|l| {
                    let b = g1.x(l);
                    let orbit = g.flow.orbit(b, dt, k_lo, k_hi)?;
                    let col = (jlo..=jhi)
                        .map(|j| {
                            simpson_anchored(ilo as isize, ihi as isize, origin, dt, |i| {
                                let s = (i - origin) as f64 * dt;
                                // e^{-sX}(t_j, b) = (t_j - s, b), whose target is Phi_{t_j - s}(b)
                                let k = j as isize - i;
                                let pv = psi.at(k + origin, l as isize);
                                if pv == 0.0 || !sf.axis0.contains(s) {
                                    return 0.0;
                                }
                                let target = orbit[(k - k_lo) as usize];
                                if !sf.axis1.contains(target) {
                                    return 0.0;
                                }
                                (f.f)(s, target) * pv
                            })
                        })
                        .collect();
                    Ok((l, col))
                })
                .collect::<Result<_>>()?;
            let n1 = g1.n;
            let mut samples = vec![0.0; tg.n * n1];
            for (l, col) in cols {
                for (jj, v) in col.into_iter().enumerate() {
                    samples[(jlo + jj) * n1 + l] = v;
                }
            }
            GridFn2D::truncated(tg, g1, samples, Some(Box2::new(out_t, sp.axis1)))
        }
        InstanceKind::Pair => {
            let grid = g1;
            let sources = match sp.axis1.intersect(&sf.axis1) {
                Some(s) => s,
                None => return Ok(zeros),
            };
            let flow = &g.flow;
            let ends = [flow.flow(sf.axis0.lo, sources.lo)?, flow.flow(sf.axis0.hi, sources.lo)?, flow.flow(sf.axis0.lo, sources.hi)?, flow.flow(sf.axis0.hi, sources.hi)?];
            let out_y = Interval::new(ends[0].min(ends[1]), ends[2].max(ends[3]));
            let Some(out_y) = out_y.intersect(&grid.extent()) else { return Ok(zeros) };
            let sgrid = Grid1::symmetric(sf.axis0.lo.abs().max(sf.axis0.hi.abs()) + grid.dx, grid.dx)?;
            let origin = sgrid.origin_offset().ok_or_else(|| Error::invalid("kernel grid must contain 0"))?;
            let (Some((ilo, ihi)), Some((jlo, jhi)), Some((xlo, xhi))) =
                (sgrid.index_range(&sf.axis0), grid.index_range(&out_y), g0.index_range(&sp.axis0))
            else {
                return Ok(zeros);
            };
            let k_lo = (origin - ihi as isize - 1).min(0);
            let k_hi = (origin - ilo as isize + 1).max(0);
            let rows: Vec<Vec<f64>> = (jlo..=jhi)
                .into_par_iter()
                .map(|j| {
                    let orbit = flow.orbit(grid.x(j), sgrid.dx, k_lo, k_hi)?;
                    Ok((xlo..=xhi)
                        .map(|xi| {
                            simpson_anchored(ilo as isize, ihi as isize, origin, sgrid.dx, |i| {
                                let s = (i - origin) as f64 * sgrid.dx;
                                // e^{-sX}(x, y) = (x, Psi_{-s} y)
                                let y = orbit[(origin - i - k_lo) as usize];
                                if !sf.contains(s, y) {
                                    return 0.0;
                                }
                                let pv = psi.eval_in_row(xi, y);
                                if pv == 0.0 {
                                    return 0.0;
                                }
                                (f.f)(s, y) * pv
                            })
                        })
                        .collect())
                })
                .collect::<Result<_>>()?;
            let n1 = grid.n;
            let mut samples = vec![0.0; g0.n * n1];
            for (jj, row) in rows.into_iter().enumerate() {
                for (xx, v) in row.into_iter().enumerate() {
                    samples[(xlo + xx) * n1 + jlo + jj] = v;
                }
            }
            GridFn2D::truncated(g0, g1, samples, Some(Box2::new(sp.axis0, out_y)))
        }
    }
}
