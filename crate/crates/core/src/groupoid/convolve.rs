use super::instance::{GroupoidInstance, InstanceKind};
use crate::error::{Error, Result};
use crate::gridfn::quadrature::simpson_anchored;
use crate::gridfn::{Box2, GridFn, GridFn1D, GridFn2D, Interval};
use rayon::prelude::*;

/// Convolution in the groupoid algebra, with Haar measure the Lebesgue measure
/// on source fibers.
///
/// * line: `(f * g)(x) = int f(u) g(x - u) du`
/// * pair: `(f * g)(x, y) = int f(w, y) g(x, w) dw`
/// * transformation: `(f * g)(t, b) = int f(t - s, Phi_s b) g(s, b) ds`
pub fn convolve(g: &GroupoidInstance, f1: &GridFn, f2: &GridFn) -> Result<GridFn> {
    match (g.kind, f1, f2) {
        (InstanceKind::Line, GridFn::D1(a), GridFn::D1(b)) => Ok(GridFn::D1(a.convolve(b)?)),
        (InstanceKind::Pair, GridFn::D2(a), GridFn::D2(b)) => Ok(GridFn::D2(convolve_pair(g, a, b)?)),
        (InstanceKind::Transformation, GridFn::D2(a), GridFn::D2(b)) => Ok(GridFn::D2(convolve_transformation(g, a, b)?)),
        _ => Err(Error::invalid("function dimensions do not match the groupoid")),
    }
}

pub(crate) fn check_arrow_grid(g: &GroupoidInstance, f: &GridFn2D) -> Result<()> {
    let (g0, g1) = g.arrow_grids()?;
    let (f0, f1) = f.grids();
    if !f0.same_as(&g0) || !f1.same_as(&g1) {
        f0.check_spacing(&g0)?;
        f1.check_spacing(&g1)?;
        return Err(Error::GridMismatch(format!("function lives on {f0:?} x {f1:?}, groupoid grid is {g0:?} x {g1:?}")));
    }
    Ok(())
}

fn convolve_pair(g: &GroupoidInstance, f: &GridFn2D, h: &GridFn2D) -> Result<GridFn2D> {
    check_arrow_grid(g, f)?;
    check_arrow_grid(g, h)?;
    let (grid, _) = f.grids();
    let (Some(sf), Some(sh)) = (f.support(), h.support()) else { return Ok(GridFn2D::zeros(grid, grid)) };
    let Some(inner) = sf.axis0.intersect(&sh.axis1) else { return Ok(GridFn2D::zeros(grid, grid)) };
    let (Some((klo, khi)), Some((ilo, ihi)), Some((jlo, jhi))) =
        (grid.index_range(&inner), grid.index_range(&sh.axis0), grid.index_range(&sf.axis1))
    else {
        return Ok(GridFn2D::zeros(grid, grid));
    };
    let n = grid.n;
    let dx = grid.dx;
    let mut samples = vec![0.0; n * n];
    samples.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        if i < ilo || i > ihi {
            return;
        }
        for (j, out) in row.iter_mut().enumerate().take(jhi + 1).skip(jlo) {
            // kernels built from the line have their kink on the diagonal w = y
            *out = simpson_anchored(klo as isize, khi as isize, j as isize, dx, |k| f.at(k, j as isize) * h.at(i as isize, k));
        }
    });
    GridFn2D::truncated(grid, grid, samples, Some(Box2::new(sh.axis0, sf.axis1)))
}

fn convolve_transformation(g: &GroupoidInstance, f: &GridFn2D, h: &GridFn2D) -> Result<GridFn2D> {
    check_arrow_grid(g, f)?;
    check_arrow_grid(g, h)?;
    let (tg, bg) = f.grids();
    let (Some(sf), Some(sh)) = (f.support(), h.support()) else { return Ok(GridFn2D::zeros(tg, bg)) };
    let out_t = sf.axis0.sum(&sh.axis0);
    if !tg.extent().contains_interval(&out_t) {
        return Err(Error::SupportEscapes { required: format!("t in {out_t}"), available: format!("t in {}", tg.extent()) });
    }
    let origin = tg.origin_offset().ok_or_else(|| Error::invalid("time grid must contain 0 as a node"))?;
    let (Some((ilo, ihi)), Some((jlo, jhi)), Some((llo, lhi))) =
        (tg.index_range(&sf.axis0), tg.index_range(&out_t), bg.index_range(&sh.axis1))
    else {
        return Ok(GridFn2D::zeros(tg, bg));
    };
    // panel alignment may widen the index range by one node
    let k_lo = (jlo as isize - ihi as isize - 1).min(0);
    let k_hi = (jhi as isize - ilo as isize + 1).max(0);
    let dt = tg.dx;
    let columns: Vec<(usize, Vec<f64>)> = (llo..=lhi)
        .into_par_iter()
        .map(|l| {
            let b = bg.x(l);
            let orbit = g.flow.orbit(b, dt, k_lo, k_hi)?;
            let col: Vec<f64> = (jlo..=jhi)
                .map(|j| {
                    simpson_anchored(ilo as isize, ihi as isize, origin, dt, |i| {
                        // t_j - t_i sits at index (j - i) + origin and is the flow time
                        let k = j as isize - i;
                        let gv = h.at(k + origin, l as isize);
                        if gv == 0.0 {
                            return 0.0;
                        }
                        let y = orbit[(k - k_lo) as usize];
                        f.eval_in_row(i as usize, y) * gv
                    })
                })
                .collect();
            Ok((l, col))
        })
        .collect::<Result<_>>()?;
    let nb = bg.n;
    let mut samples = vec![0.0; tg.n * nb];
    for (l, col) in columns {
        for (jj, v) in col.into_iter().enumerate() {
            samples[(jlo + jj) * nb + l] = v;
        }
    }
    GridFn2D::truncated(tg, bg, samples, Some(Box2::new(out_t, sh.axis1)))
}

/// Restriction to the isotropy of the invariant point `{0}` of a
/// transformation groupoid: `f |-> f(., 0)`, a function on the line.
pub fn restrict_to_gx(g: &GroupoidInstance, f: &GridFn2D) -> Result<GridFn1D> {
    if g.kind != InstanceKind::Transformation {
        return Err(Error::invalid("restriction to an invariant point is defined for transformation groupoids"));
    }
    let a0 = g.flow.eval_field(0.0);
    if a0 != 0.0 {
        return Err(Error::NotInvariant(a0));
    }
    check_arrow_grid(g, f)?;
    f.slice_axis0_transposed(0.0)
}

impl GridFn2D {
    /// The column at axis-1 coordinate `y`, as a function of the axis-0 coordinate.
    pub fn slice_axis0_transposed(&self, y: f64) -> Result<GridFn1D> {
        let (g0, g1) = self.grids();
        let j = g1.index_of(y).ok_or_else(|| Error::invalid(format!("{y} is not a node of axis 1")))?;
        let col: Vec<f64> = (0..g0.n).map(|i| self.get(i, j)).collect();
        let support: Option<Interval> = match self.support() {
            Some(s) if s.axis1.contains(y) => Some(s.axis0),
            _ => None,
        };
        GridFn1D::truncated(g0, col, support)
    }
}
