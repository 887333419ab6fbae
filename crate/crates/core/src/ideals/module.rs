use super::flat::{flat_split, TABLE_LIMIT};
use super::hadamard::{hadamard_split, ORDER_GATE_SLACK};
use super::order::{order_of_1d, vanishing_order, Order, OrderEstimate};
use crate::error::{Error, Result};
use crate::factorize::target_hull;
use crate::gridfn::{AnalyticFn1D, Box2, GridFn, GridFn1D, GridFn2D, Interval};
use crate::groupoid::{GroupoidInstance, InstanceKind};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Width of the ramp of the cutoff around the base support.
pub const CUTOFF_MARGIN: f64 = 0.25;
/// Where the base factor is below this fraction of its maximum the quotient is set to 0.
pub const BASE_FLOOR: f64 = 1e-12;

/// Which anchor map the base function is pulled back along.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `f = (g o t) h`
    Target,
    /// `f = h (g o s)`
    Source,
}

/// A function on the base, in closed form or sampled.
#[derive(Clone, Debug)]
pub enum BaseFactor {
    Closed(AnalyticFn1D),
    Sampled(GridFn1D),
}

impl BaseFactor {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            BaseFactor::Closed(f) => f.eval(x),
            BaseFactor::Sampled(f) => f.eval(x),
        }
    }
}

/// `f = (g o t) h` or `f = h (g o s)` with `g` vanishing to order `p` at the
/// invariant point and `h` to order `q` on its isotropy.
#[derive(Clone, Debug)]
pub struct ModuleSplit {
    pub side: Side,
    pub p: Order,
    pub base: BaseFactor,
    /// `g` on the base grid.
    pub base_samples: GridFn1D,
    pub rest: GridFn2D,
    /// `|f - (g o anchor) h|_inf`.
    pub defect: f64,
    pub base_order: OrderEstimate,
    pub rest_order: OrderEstimate,
}

/// `Phi_{t_i}(b_l)` and `Phi_{-t_i}(b_l)` at every arrow node, row-major.
/// Flow integration dominates the cost of target-side operations, so callers
/// that factor many functions on one instance build this once.
#[derive(Clone, Debug)]
pub struct FlowTable {
    n_t: usize,
    n_b: usize,
    forward: Vec<f64>,
    backward: Vec<f64>,
}

impl FlowTable {
    pub fn new(g: &GroupoidInstance) -> Result<Self> {
        let (tg, bg) = g.arrow_grids()?;
        let o = tg.origin_offset().filter(|o| *o >= 0).ok_or_else(|| Error::invalid("time grid must contain 0 as a node"))? as usize;
        let m = o.max(tg.n - 1 - o);
        let orbits: Vec<Vec<f64>> = (0..bg.n).into_par_iter().map(|l| g.flow.orbit(bg.x(l), tg.dx, -(m as isize), m as isize)).collect::<Result<_>>()?;
        let mut forward = vec![0.0; tg.n * bg.n];
        let mut backward = vec![0.0; tg.n * bg.n];
        for (l, orb) in orbits.iter().enumerate() {
            for i in 0..tg.n {
                forward[i * bg.n + l] = orb[m + i - o];
                backward[i * bg.n + l] = orb[m + o - i];
            }
        }
        Ok(FlowTable { n_t: tg.n, n_b: bg.n, forward, backward })
    }

    /// `Phi_{t_i}(b_l)`, the target of the arrow `(t_i, b_l)`.
    pub fn targets(&self) -> &[f64] {
        &self.forward
    }

    fn check(&self, f: &GridFn2D) -> Result<()> {
        let (tg, bg) = f.grids();
        if (tg.n, bg.n) != (self.n_t, self.n_b) {
            return Err(Error::GridMismatch(format!("flow table is {}x{}, function is {}x{}", self.n_t, self.n_b, tg.n, bg.n)));
        }
        Ok(())
    }
}

/// `anchor(t_i, b_l)` at every arrow node, row-major.
pub(crate) fn anchor_values(g: &GroupoidInstance, side: Side, table: Option<&FlowTable>) -> Result<Vec<f64>> {
    let (tg, bg) = g.arrow_grids()?;
    match (side, table) {
        (Side::Source, _) => Ok((0..tg.n * bg.n).map(|idx| bg.x(idx % bg.n)).collect()),
        (Side::Target, Some(t)) => Ok(t.targets().to_vec()),
        (Side::Target, None) => Ok(FlowTable::new(g)?.forward),
    }
}

fn anchor_hull(g: &GroupoidInstance, f: &GridFn2D, side: Side) -> Result<Option<Interval>> {
    match side {
        Side::Target => target_hull(g, &GridFn::D2(f.clone())),
        Side::Source => Ok(f.support().map(|s| s.axis1)),
    }
}

/// Cutoff equal to 1 on `k_set`, supported inside the base grid.
fn base_cutoff(g: &GroupoidInstance, k_set: Interval) -> Result<AnalyticFn1D> {
    let room = g.base_grid.extent();
    let margin = CUTOFF_MARGIN.min(k_set.lo - room.lo).min(room.hi - k_set.hi);
    if margin <= 2.0 * g.base_grid.dx {
        return Err(Error::Precondition(format!("anchor image {k_set} leaves no room for a cutoff inside the base {room}")));
    }
    AnalyticFn1D::plateau(k_set, k_set.expand(margin))
}

fn divide(f: &GridFn2D, denom: &[f64], floor: f64, row0: Option<(usize, &[f64])>) -> Result<GridFn2D> {
    let (g0, g1) = f.grids();
    let n1 = g1.n;
    let mut s: Vec<f64> = f
        .samples()
        .par_iter()
        .zip(denom.par_iter())
        .map(|(v, d)| if *v == 0.0 || d.abs() < floor || d.abs() == 0.0 { 0.0 } else { v / d })
        .collect();
    if let Some((l, row)) = row0 {
        for i in 0..g0.n {
            s[i * n1 + l] = row[i];
        }
    }
    GridFn2D::truncated(g0, g1, s, f.support())
}

/// Pulls a factor vanishing to order `p` at the invariant point `{0}` out of
/// a function on the transformation groupoid vanishing to order `p + q` on its
/// isotropy `{b = 0}`.
pub fn module_factorize(g: &GroupoidInstance, f: &GridFn2D, p: Order, q: Order, side: Side) -> Result<ModuleSplit> {
    module_factorize_with(g, f, p, q, side, None)
}

/// [`module_factorize`] with a precomputed flow table for the instance.
pub fn module_factorize_with(g: &GroupoidInstance, f: &GridFn2D, p: Order, q: Order, side: Side, table: Option<&FlowTable>) -> Result<ModuleSplit> {
    if g.kind != InstanceKind::Transformation {
        return Err(Error::invalid("module factorization is implemented for transformation groupoids"));
    }
    let a = g.flow.field();
    let a0 = a.eval(0.0);
    if a0 != 0.0 {
        return Err(Error::NotInvariant(a0));
    }
    let est = vanishing_order(f, 1)?;
    let need = p.plus(q);
    if !est.at_least(need, ORDER_GATE_SLACK) {
        return Err(Error::OrderGate { measured: est.p_hat, required: need.as_f64() });
    }
    let (tg, bg) = f.grids();
    let Some(k_set) = anchor_hull(g, f, side)? else {
        let base = BaseFactor::Closed(AnalyticFn1D::monomial(0));
        return Ok(ModuleSplit {
            side,
            p,
            base_samples: GridFn1D::zeros(bg),
            base,
            rest: f.clone(),
            defect: 0.0,
            base_order: est,
            rest_order: est,
        });
    };
    let chi = base_cutoff(g, k_set)?;
    let owned;
    let table = match (side, table) {
        (Side::Target, None) => {
            owned = FlowTable::new(g)?;
            Some(&owned)
        }
        _ => table,
    };
    let anchor = anchor_values(g, side, table)?;
    let (base, rest) = match p {
        Order::Finite(0) => (BaseFactor::Closed(chi), f.clone()),
        Order::Finite(p) => {
            let gp = AnalyticFn1D::monomial(p).mul(&chi);
            let denom: Vec<f64> = anchor.iter().map(|x| x.powi(p as i32)).collect();
            // on the isotropy the quotient is the Hadamard coefficient over kappa^p,
            // kappa(t) = d/db Phi_t(0) = exp(t a'(0))
            let l0 = bg.index_of(0.0).ok_or_else(|| Error::invalid("base grid must contain 0 as a node"))?;
            let split = hadamard_split(f, 1, p)?;
            let slope = match side {
                Side::Target => a.eval_derivative(0.0, 1),
                Side::Source => 0.0,
            };
            let row: Vec<f64> = (0..tg.n).map(|i| split.f_alpha().get(i, l0) * (-(p as f64) * slope * tg.x(i)).exp()).collect();
            (BaseFactor::Closed(gp), divide(f, &denom, 0.0, Some((l0, &row)))?)
        }
        Order::Infinite => {
            let split = match side {
                Side::Source => flat_split(f, 1, TABLE_LIMIT, TABLE_LIMIT as u32)?,
                Side::Target => flat_split(&in_target_chart_with(g, f, table.expect("built for the target side"))?, 1, TABLE_LIMIT, TABLE_LIMIT as u32)?,
            };
            let gs = split.rho.map_with_x(|x, v| v * chi.eval(x));
            let gs = GridFn1D::truncated(bg, gs.samples().to_vec(), chi.support())?;
            let base = BaseFactor::Sampled(gs);
            let denom: Vec<f64> = anchor.iter().map(|x| base.eval(*x)).collect();
            let floor = BASE_FLOOR * denom.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            (base, divide(f, &denom, floor, None)?)
        }
    };
    let recon_denom: Vec<f64> = anchor.iter().map(|x| base.eval(*x)).collect();
    let recon = GridFn2D::truncated(tg, bg, rest.samples().iter().zip(&recon_denom).map(|(h, d)| h * d).collect(), rest.support())?;
    let defect = f.sub(&recon)?.sup_norm();
    let base_samples = match &base {
        BaseFactor::Sampled(s) => s.clone(),
        BaseFactor::Closed(c) => GridFn1D::sample(c, bg)?,
    };
    let base_order = order_of_1d(&base_samples)?;
    let rest_order = vanishing_order(&rest, 1)?;
    Ok(ModuleSplit { side, p, base, base_samples, rest, defect, base_order, rest_order })
}

/// `F(t, y) = f(t, Phi_{-t} y)`: the function in target coordinates, where
/// the isotropy is still `{y = 0}`.
pub fn in_target_chart(g: &GroupoidInstance, f: &GridFn2D) -> Result<GridFn2D> {
    in_target_chart_with(g, f, &FlowTable::new(g)?)
}

pub fn in_target_chart_with(g: &GroupoidInstance, f: &GridFn2D, table: &FlowTable) -> Result<GridFn2D> {
    table.check(f)?;
    let (tg, bg) = f.grids();
    let Some(k_set) = target_hull(g, &GridFn::D2(f.clone()))? else { return Ok(GridFn2D::zeros(tg, bg)) };
    let support = f.support().map(|s| Box2::new(s.axis0, k_set));
    let s: Vec<f64> = (0..tg.n * bg.n).into_par_iter().map(|idx| f.eval_in_row(idx / bg.n, table.backward[idx])).collect();
    GridFn2D::truncated(tg, bg, s, support)
}
