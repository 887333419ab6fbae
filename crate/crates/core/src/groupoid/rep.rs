use super::convolve::{check_arrow_grid, convolve};
use super::flow::FlowField;
use super::instance::{GroupoidInstance, InstanceKind};
use crate::error::{Error, Result};
use crate::gridfn::interp::lagrange4;
use crate::gridfn::quadrature::simpson_anchored;
use crate::gridfn::{Box2, Grid1, GridFn, GridFn1D, GridFn2D, Interval};
use rayon::prelude::*;

/// Which space a groupoid function acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroupoidAction {
    /// `G` acting on itself by left multiplication (momentum = target).
    SelfLeft,
    /// `G` acting on its base (momentum = identity of `B`).
    OnBase,
}

/// An action of the line group: on an interval by a flow, or on the arrow
/// space of a two-dimensional groupoid by a flow of one coordinate.
#[derive(Clone, Debug)]
pub enum LineAction {
    Interval(FlowField),
    Fiber { axis: usize, flow: FlowField },
}

impl LineAction {
    /// The flow of the right-invariant field generating `G` acting on itself:
    /// translation of the line, `(x, y) -> (x, Psi_s y)` on the pair groupoid,
    /// `(t, b) -> (t + s, b)` on a transformation groupoid.
    pub fn self_left(g: &GroupoidInstance) -> LineAction {
        let t_max = g.flow.t_max();
        match g.kind {
            InstanceKind::Line => LineAction::Interval(FlowField::translation(t_max)),
            InstanceKind::Pair => LineAction::Fiber { axis: 1, flow: g.flow.clone() },
            InstanceKind::Transformation => LineAction::Fiber { axis: 0, flow: FlowField::translation(t_max) },
        }
    }

    pub fn flow(&self) -> &FlowField {
        match self {
            LineAction::Interval(f) | LineAction::Fiber { flow: f, .. } => f,
        }
    }

    fn axis(&self) -> usize {
        match self {
            LineAction::Interval(_) => 0,
            LineAction::Fiber { axis, .. } => *axis,
        }
    }
}

/// A function viewed as a family of lines along one axis.
struct Lines<'a> {
    grid: Grid1,
    support: Interval,
    count: usize,
    value: Box<dyn Fn(usize, isize) -> f64 + Sync + 'a>,
}

/// Region swept by `Phi_s([lo, hi])` for `s` in `times` (orbits are monotone in
/// both time and starting point).
fn swept(flow: &FlowField, iv: Interval, times: Interval) -> Result<Interval> {
    let ends = [flow.flow(times.lo, iv.lo)?, flow.flow(times.hi, iv.lo)?, flow.flow(times.lo, iv.hi)?, flow.flow(times.hi, iv.hi)?];
    Ok(Interval::new(ends[0].min(ends[1]), ends[2].max(ends[3])))
}

/// `out[j][line] = int f(s) psi_line(Phi_{-s} m_j) ds` over output nodes `j`.
fn line_pass(f: &GridFn1D, flow: &FlowField, lines: &Lines) -> Result<Option<(Interval, usize, Vec<Vec<f64>>)>> {
    let Some(sf) = f.support() else { return Ok(None) };
    let fg = f.grid();
    let origin = fg.origin_offset().ok_or_else(|| Error::invalid("the kernel grid must contain 0 as a node"))?;
    let Some((ilo, ihi)) = f.support_indices() else { return Ok(None) };
    let out = swept(flow, lines.support, sf)?;
    if !lines.grid.extent().contains_interval(&out) {
        return Err(Error::SupportEscapes { required: format!("{out}"), available: format!("{}", lines.grid.extent()) });
    }
    let Some((jlo, jhi)) = lines.grid.index_range(&out) else { return Ok(None) };
    // panel alignment may widen the index range by one node
    let k_lo = (origin - ihi as isize - 1).min(0);
    let k_hi = (origin - ilo as isize + 1).max(0);
    let lattice = flow.is_translation() && (fg.dx - lines.grid.dx).abs() <= 1e-12 * fg.dx;
    let ga = lines.grid;
    let rows: Vec<Vec<f64>> = (jlo..=jhi)
        .into_par_iter()
        .map(|j| {
            let m = ga.x(j);
            let mut acc = vec![0.0; lines.count];
            if lattice {
                for (line, a) in acc.iter_mut().enumerate() {
                    // m_j - s_i is the node j - (i - origin)
                    *a = simpson_anchored(ilo as isize, ihi as isize, origin, fg.dx, |i| {
                        f.at(i) * (lines.value)(line, j as isize - i + origin)
                    });
                }
                return Ok(acc);
            }
            let orbit = flow.orbit(m, fg.dx, k_lo, k_hi)?;
            for (line, a) in acc.iter_mut().enumerate() {
                *a = simpson_anchored(ilo as isize, ihi as isize, origin, fg.dx, |i| {
                    let y = orbit[(origin - i - k_lo) as usize];
                    if !lines.support.contains(y) {
                        return 0.0;
                    }
                    f.at(i) * lagrange4(y, ga.x0, ga.dx, |q| (lines.value)(line, q))
                });
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    Ok(Some((out, jlo, rows)))
}

/// Integrated representation of an action of the line:
/// `(pi(f) psi)(m) = int f(s) psi(Phi_{-s} m) ds`.
pub fn integrated_rep_line(action: &LineAction, f: &GridFn1D, psi: &GridFn) -> Result<GridFn> {
    let flow = action.flow();
    if let Some(s) = f.support() {
        let t = flow.t_max();
        if !Interval::symmetric(t).contains_interval(&s) {
            return Err(Error::invalid(format!("kernel support {s} exceeds the flow horizon [-{t}, {t}]")));
        }
    }
    match (action, psi) {
        (LineAction::Interval(_), GridFn::D1(p)) => {
            let grid = p.grid();
            let Some(sp) = p.support() else { return Ok(GridFn::D1(GridFn1D::zeros(grid))) };
            let lines = Lines { grid, support: sp, count: 1, value: Box::new(|_, i| p.at(i)) };
            let Some((out, jlo, rows)) = line_pass(f, flow, &lines)? else { return Ok(GridFn::D1(GridFn1D::zeros(grid))) };
            let mut samples = vec![0.0; grid.n];
            for (jj, r) in rows.into_iter().enumerate() {
                samples[jlo + jj] = r[0];
            }
            Ok(GridFn::D1(GridFn1D::truncated(grid, samples, Some(out))?))
        }
        (LineAction::Fiber { axis, .. }, GridFn::D2(p)) => {
            let (g0, g1) = p.grids();
            let zeros = || GridFn::D2(GridFn2D::zeros(g0, g1));
            let Some(sp) = p.support() else { return Ok(zeros()) };
            let axis = *axis;
            if axis > 1 {
                return Err(Error::invalid(format!("axis {axis} out of range")));
            }
            let other = 1 - axis;
            let lines = Lines {
                grid: p.grid(axis),
                support: sp.axis(axis),
                count: p.grid(other).n,
                value: Box::new(move |line, q| if axis == 0 { p.at(q, line as isize) } else { p.at(line as isize, q) }),
            };
            let Some((out, jlo, rows)) = line_pass(f, flow, &lines)? else { return Ok(zeros()) };
            let n1 = g1.n;
            let mut samples = vec![0.0; g0.n * n1];
            for (jj, r) in rows.into_iter().enumerate() {
                let j = jlo + jj;
                for (line, v) in r.into_iter().enumerate() {
                    let idx = if axis == 0 { j * n1 + line } else { line * n1 + j };
                    samples[idx] = v;
                }
            }
            Ok(GridFn::D2(GridFn2D::truncated(g0, g1, samples, Some(sp.with_axis(axis, out)))?))
        }
        _ => Err(Error::invalid("line action does not match the dimension of psi")),
    }
}

/// `X^n psi` for the generator `X = a d/dm` of the action, by stencils.
/// The result is cut back to the support of `psi` after every step.
pub fn apply_field(action: &LineAction, psi: &GridFn, n: usize) -> Result<GridFn> {
    let a = action.flow().field().clone();
    let speed = action.flow().constant_speed();
    let mut cur = psi.clone();
    for _ in 0..n {
        cur = match (&cur, action.axis()) {
            (GridFn::D1(p), _) => {
                let keep = psi.as_1d().and_then(|q| q.support());
                let d = p.derivative(1)?;
                let d = match speed {
                    Some(c) => d.scale(c),
                    None => d.mul(&GridFn1D::sample(&a, d.grid())?)?,
                };
                GridFn::D1(match keep {
                    Some(k) => d.restrict(k)?,
                    None => GridFn1D::zeros(d.grid()),
                })
            }
            (GridFn::D2(p), axis) => {
                let keep = psi.as_2d().and_then(|q| q.support());
                let d = p.derivative(axis, 1)?;
                let d = match speed {
                    Some(c) => d.scale(c),
                    None => d.weighted(|x, y| a.eval(if axis == 0 { x } else { y }))?,
                };
                GridFn::D2(match keep {
                    Some(k) => d.restrict(k)?,
                    None => GridFn2D::zeros(d.grid(0), d.grid(1)),
                })
            }
        };
    }
    Ok(cur)
}

/// Integrated representation of a groupoid action:
/// `(pi(f) psi)(m) = int_{G^{mu(m)}} f(gamma^{-1}) psi(gamma m)`.
pub fn integrated_rep(g: &GroupoidInstance, action: GroupoidAction, f: &GridFn, psi: &GridFn) -> Result<GridFn> {
    match action {
        GroupoidAction::SelfLeft => convolve(g, f, psi),
        GroupoidAction::OnBase => {
            let (GridFn::D2(f), GridFn::D1(chi)) = (f, psi) else {
                return Err(Error::invalid("on-base action takes a function on G and a function on the base"));
            };
            if !chi.grid().same_as(&g.base_grid) {
                return Err(Error::GridMismatch(format!("base function grid {:?} differs from {:?}", chi.grid(), g.base_grid)));
            }
            check_arrow_grid(g, f)?;
            match g.kind {
                InstanceKind::Line => Err(Error::invalid("the line group has a one-point base")),
                InstanceKind::Pair => on_base_pair(g, f, chi).map(GridFn::D1),
                InstanceKind::Transformation => on_base_transformation(g, f, chi).map(GridFn::D1),
            }
        }
    }
}

/// `(pi(f) chi)(y) = int f(w, y) chi(w) dw`.
fn on_base_pair(g: &GroupoidInstance, f: &GridFn2D, chi: &GridFn1D) -> Result<GridFn1D> {
    let grid = g.base_grid;
    let (Some(sf), Some(sc)) = (f.support(), chi.support()) else { return Ok(GridFn1D::zeros(grid)) };
    let (Some(inner), Some((jlo, jhi))) = (sf.axis0.intersect(&sc), grid.index_range(&sf.axis1)) else {
        return Ok(GridFn1D::zeros(grid));
    };
    let Some((klo, khi)) = grid.index_range(&inner) else { return Ok(GridFn1D::zeros(grid)) };
    let vals: Vec<f64> = (jlo..=jhi)
        .into_par_iter()
        .map(|j| simpson_anchored(klo as isize, khi as isize, j as isize, grid.dx, |k| f.at(k, j as isize) * chi.at(k)))
        .collect();
    let mut samples = vec![0.0; grid.n];
    samples[jlo..=jhi].copy_from_slice(&vals);
    GridFn1D::truncated(grid, samples, Some(sf.axis1))
}

/// `(pi(f) chi)(b) = int f(t, Phi_{-t} b) chi(Phi_{-t} b) dt`.
fn on_base_transformation(g: &GroupoidInstance, f: &GridFn2D, chi: &GridFn1D) -> Result<GridFn1D> {
    let grid = g.base_grid;
    let tg = g.fiber_grid;
    let (Some(sf), Some(sc)) = (f.support(), chi.support()) else { return Ok(GridFn1D::zeros(grid)) };
    let Some(sources) = sf.axis1.intersect(&sc) else { return Ok(GridFn1D::zeros(grid)) };
    let out = swept(&g.flow, sources, sf.axis0)?;
    let Some(out) = out.intersect(&grid.extent()) else { return Ok(GridFn1D::zeros(grid)) };
    let origin = tg.origin_offset().ok_or_else(|| Error::invalid("time grid must contain 0 as a node"))?;
    let (Some((ilo, ihi)), Some((jlo, jhi))) = (tg.index_range(&sf.axis0), grid.index_range(&out)) else {
        return Ok(GridFn1D::zeros(grid));
    };
    // panel alignment may widen the index range by one node
    let k_lo = (origin - ihi as isize - 1).min(0);
    let k_hi = (origin - ilo as isize + 1).max(0);
    let vals: Vec<f64> = (jlo..=jhi)
        .into_par_iter()
        .map(|j| {
            let orbit = g.flow.orbit(grid.x(j), tg.dx, k_lo, k_hi)?;
            Ok(simpson_anchored(ilo as isize, ihi as isize, origin, tg.dx, |i| {
                let y = orbit[(origin - i - k_lo) as usize];
                let c = chi.eval(y);
                if c == 0.0 {
                    return 0.0;
                }
                f.eval_in_row(i as usize, y) * c
            }))
        })
        .collect::<Result<_>>()?;
    let mut samples = vec![0.0; grid.n];
    samples[jlo..=jhi].copy_from_slice(&vals);
    GridFn1D::truncated(grid, samples, Some(out))
}

/// Sample a function of arrows given in closed form on the arrow grid of `g`.
pub fn sample_arrow_fn(g: &GroupoidInstance, support: Option<Box2>, f: impl Fn(f64, f64) -> f64 + Sync) -> Result<GridFn2D> {
    let (g0, g1) = g.arrow_grids()?;
    GridFn2D::from_fn(g0, g1, support, f)
}
