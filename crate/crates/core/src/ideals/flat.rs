use super::envelope::flat_envelope;
use super::order::vanishing_order;
use crate::error::{Error, Result};
use crate::gridfn::{Grid1, GridFn1D, GridFn2D};
use serde::Serialize;

/// Derivative orders and roots kept in the sup table.
pub const TABLE_LIMIT: usize = 4;
/// Highest total order of the difference quotients checked on `h`.
pub const QUOTIENT_ORDER: usize = 4;
/// `h` is set to 0 where `rho` is below this fraction of its maximum.
pub const RHO_FLOOR: f64 = 1e-12;
/// Bound on the ratios reported for the difference quotients of `h`.
pub const QUOTIENT_BOUND: f64 = 10.0;
/// Position of the reference values for the quotient check.
pub const QUOTIENT_REFERENCE: f64 = 0.25;
/// Nodes of the inverted axis used by the envelope.
pub const INVERTED_NODES: usize = 8192;

/// One member `t |-> sup_{|x| <= t} sup_y |d^gamma f|^{1/m}` of the family.
#[derive(Clone, Debug)]
pub struct SupEntry {
    /// Derivative orders along the transverse and the other axis.
    pub gamma: (usize, usize),
    pub m: u32,
    pub profile: GridFn1D,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuotientBound {
    pub gamma: (usize, usize),
    /// Radial sup of the quotient at `x = QUOTIENT_REFERENCE`.
    pub reference: f64,
    /// Largest ratio to `reference` on `[4 dx, QUOTIENT_REFERENCE]`, and where.
    pub max_ratio: f64,
    pub at: f64,
    /// Sup over the inner half of that window divided by the sup over the
    /// outer half. Large values mean growth toward `x = 0`.
    pub growth: f64,
}

impl QuotientBound {
    pub fn within_reference(&self) -> bool {
        self.max_ratio <= QUOTIENT_BOUND
    }
}

/// `f = rho(x) h(x, y)` with `rho` flat at 0 and `h` flat on `{x = 0}`.
#[derive(Clone, Debug)]
pub struct FlatSplit {
    /// On the transverse grid; `rho(x) = phi(|x|)`.
    pub rho: GridFn1D,
    pub h: GridFn2D,
    pub sup_table: Vec<SupEntry>,
    pub axis: usize,
    /// `|f - rho h|_inf` over the whole grid.
    pub defect: f64,
    pub quotients: Vec<QuotientBound>,
}

fn half_grid(g: Grid1) -> Result<(Grid1, usize)> {
    let o = g.origin_offset().filter(|o| *o >= 0 && (*o as usize) < g.n).ok_or_else(|| Error::invalid("transverse grid must contain 0 as a node"))?;
    let o = o as usize;
    let k = o.max(g.n - 1 - o);
    Ok((Grid1::new(g.dx, g.dx, k)?, o))
}

/// `sup_y |v|` at `|x| = t`, then the running max in `t` starting from `x = 0`.
fn radial_sup(profile: &[f64], o: usize, k: usize) -> (f64, Vec<f64>) {
    let at = |i: isize| if i < 0 || i as usize >= profile.len() { 0.0 } else { profile[i as usize] };
    let mut run = profile[o];
    let at0 = run;
    let out = (1..=k)
        .map(|j| {
            run = run.max(at(o as isize + j as isize)).max(at(o as isize - j as isize));
            run
        })
        .collect();
    (at0, out)
}

/// Fourth-order central stencils of the smallest width for derivative
/// orders 1 to 4, with their half-widths.
fn compact_stencil(order: usize) -> (&'static [f64], f64) {
    match order {
        1 => (&[1.0, -8.0, 0.0, 8.0, -1.0], 12.0),
        2 => (&[-1.0, 16.0, -30.0, 16.0, -1.0], 12.0),
        3 => (&[1.0, -8.0, 13.0, 0.0, -13.0, 8.0, -1.0], 8.0),
        4 => (&[-1.0, 12.0, -39.0, 56.0, -39.0, 12.0, -1.0], 6.0),
        _ => unreachable!("orders above {TABLE_LIMIT} are rejected up front"),
    }
}

/// `order`-th derivative along `axis` by one compact stencil, so the support
/// widens by at most three nodes.
fn compact_derivative(f: &GridFn2D, axis: usize, order: usize) -> Result<GridFn2D> {
    if order == 0 {
        return Ok(f.clone());
    }
    let (w, denom) = compact_stencil(order);
    let half = (w.len() / 2) as isize;
    let (g0, g1) = f.grids();
    let h = f.grid(axis).dx;
    let scale = 1.0 / (denom * h.powi(order as i32));
    let mut samples = vec![0.0; g0.n * g1.n];
    for i in 0..g0.n {
        for j in 0..g1.n {
            let mut acc = 0.0;
            for (k, c) in w.iter().enumerate() {
                let d = k as isize - half;
                acc += c * if axis == 0 { f.at(i as isize + d, j as isize) } else { f.at(i as isize, j as isize + d) };
            }
            samples[i * g1.n + j] = acc * scale;
        }
    }
    let support = f.support().map(|s| s.with_axis(axis, s.axis(axis).expand(half as f64 * h)));
    GridFn2D::truncated(g0, g1, samples, support)
}

fn mixed_derivative(f: &GridFn2D, axis: usize, gamma: (usize, usize)) -> Result<GridFn2D> {
    compact_derivative(&compact_derivative(f, axis, gamma.0)?, 1 - axis, gamma.1)
}

fn multi_indices(order: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..=order).flat_map(move |a| (0..=order - a).map(move |b| (a, b)))
}

/// The family of sup profiles for `|gamma| <= g_max`, `m <= m_max`, on the
/// positive transverse nodes.
pub fn sup_table(f: &GridFn2D, axis: usize, g_max: usize, m_max: u32) -> Result<Vec<SupEntry>> {
    let (half, o) = half_grid(f.grid(axis))?;
    let mut out = Vec::new();
    for gamma in multi_indices(g_max) {
        let d = mixed_derivative(f, axis, gamma)?;
        let (_, radial) = radial_sup(&d.axis_sup_profile(axis), o, half.n);
        for m in 1..=m_max {
            let s: Vec<f64> = radial.iter().map(|v| v.powf(1.0 / m as f64)).collect();
            let support = s.iter().any(|v| *v != 0.0).then(|| half.extent());
            out.push(SupEntry { gamma, m, profile: GridFn1D::new(half, s, support)? });
        }
    }
    Ok(out)
}

/// Largest ratio of `sup_y |d^gamma h|` on `[4 dx, 0.25]` to its value at
/// `|x| = 0.25`, plus the growth toward 0, for every `|gamma| <= QUOTIENT_ORDER`.
pub fn quotient_bounds(h: &GridFn2D, axis: usize) -> Result<Vec<QuotientBound>> {
    let g = h.grid(axis);
    let (half, o) = half_grid(g)?;
    let lo = 4.0 * g.dx;
    let r = ((QUOTIENT_REFERENCE / g.dx).round() as usize).min(half.n);
    let mut out = Vec::new();
    for gamma in multi_indices(QUOTIENT_ORDER) {
        let d = mixed_derivative(h, axis, gamma)?;
        let p = d.axis_sup_profile(axis);
        let at = |i: isize| if i < 0 || i as usize >= p.len() { 0.0 } else { p[i as usize] };
        let radial = |j: usize| at(o as isize + j as isize).max(at(o as isize - j as isize));
        let reference = radial(r);
        let mut bound = QuotientBound { gamma, reference, max_ratio: 0.0, at: 0.0, growth: 0.0 };
        let (mut inner, mut outer) = (0.0f64, 0.0f64);
        for j in 1..=r {
            let x = j as f64 * g.dx;
            if x < lo {
                continue;
            }
            let v = radial(j);
            if 2 * j <= r {
                inner = inner.max(v);
            } else {
                outer = outer.max(v);
            }
            let ratio = if v == 0.0 { 0.0 } else if reference == 0.0 { f64::INFINITY } else { v / reference };
            if ratio > bound.max_ratio {
                bound.max_ratio = ratio;
                bound.at = x;
            }
        }
        bound.growth = if inner == 0.0 { 0.0 } else if outer == 0.0 { f64::INFINITY } else { inner / outer };
        out.push(bound);
    }
    Ok(out)
}

/// Splits a function flat on `{x = 0}` (`x` along `axis`) into a flat radial
/// factor and a quotient whose difference quotients stay bounded near 0.
pub fn flat_split(f: &GridFn2D, axis: usize, g_max: usize, m_max: u32) -> Result<FlatSplit> {
    if g_max > TABLE_LIMIT || m_max as usize > TABLE_LIMIT || m_max == 0 {
        return Err(Error::invalid(format!("sup table limits must satisfy |gamma| <= {TABLE_LIMIT}, 1 <= m <= {TABLE_LIMIT}")));
    }
    let est = vanishing_order(f, axis)?;
    if !est.flat_flag {
        return Err(Error::NotFlat { measured: est.p_hat });
    }
    let g = f.grid(axis);
    let (half, o) = half_grid(g)?;
    let (table, phi) = if f.is_zero() {
        // any positive flat template will do
        let t: Vec<f64> = half.xs().iter().map(|t| (-1.0 / (t * t)).exp()).collect();
        (Vec::new(), GridFn1D::new(half, t, Some(half.extent()))?)
    } else {
        let table = sup_table(f, axis, g_max, m_max)?;
        let family: Vec<GridFn1D> = table.iter().map(|e| e.profile.clone()).collect();
        let phi = flat_envelope(&family, INVERTED_NODES)?;
        (table, phi)
    };
    let rho_s: Vec<f64> = (0..g.n)
        .map(|i| {
            let j = (i as isize - o as isize).unsigned_abs();
            if j == 0 || j > half.n { 0.0 } else { phi.samples()[j - 1] }
        })
        .collect();
    let rho = GridFn1D::new(g, rho_s.clone(), Some(g.extent()))?;
    let floor = RHO_FLOOR * rho_s.iter().fold(0.0f64, |m, v| m.max(*v));
    let h = f.weighted(|x, y| {
        let t = if axis == 0 { x } else { y };
        let i = g.index_of(t).expect("weights are evaluated at grid nodes");
        if rho_s[i] >= floor && rho_s[i] > 0.0 { 1.0 / rho_s[i] } else { 0.0 }
    })?;
    let recon = h.weighted(|x, y| rho_s[g.index_of(if axis == 0 { x } else { y }).unwrap()])?;
    let defect = f.sub(&recon)?.sup_norm();
    let quotients = quotient_bounds(&h, axis)?;
    // a bounded quotient may peak inside the window; only growth toward 0 is
    // taken as unboundedness
    if let Some(q) = quotients.iter().find(|q| q.growth > QUOTIENT_BOUND) {
        return Err(Error::Unbounded { gamma: q.gamma, x: q.at, ratio: q.growth });
    }

    Ok(FlatSplit { rho, h, sup_table: table, axis, defect, quotients })
}
