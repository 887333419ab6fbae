use super::chart::{build_chart_transfer, ChartFn, ChartTransfer, ChartWindow};
use super::linefac::{linefac, nonzero_inside, support_of, support_summary, LineFacConfig};
use super::phi::{Layout, PhiSource};
use super::{FactorPair, FactorizationResult, PairCertificate};
use crate::error::{Error, Result};
use crate::gridfn::{AnalyticFn1D, Box2, GridFn, GridFn1D, GridFn2D, Interval};
use crate::groupoid::{integrated_rep, GroupoidAction, GroupoidInstance, InstanceKind, LineAction};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupoidFacConfig {
    pub line: LineFacConfig,
    /// Base window `U` of the chart; defaults to a margin around `t(supp phi)`.
    #[serde(default)]
    pub base_window: Option<Interval>,
    /// Margin added around `t(supp phi)` when the window is chosen automatically.
    #[serde(default = "default_margin")]
    pub window_margin: f64,
    /// Smallest chart half-width tried when shrinking `eps`.
    #[serde(default = "default_eps_min")]
    pub eps_min: f64,
    /// Widest base interval handled by one chart; wider targets are split by a
    /// partition of unity.
    #[serde(default)]
    pub chart_width: Option<f64>,
}

fn default_margin() -> f64 {
    0.25
}

fn default_eps_min() -> f64 {
    1e-3
}

impl GroupoidFacConfig {
    pub fn new(line: LineFacConfig) -> Self {
        GroupoidFacConfig { line, base_window: None, window_margin: default_margin(), eps_min: default_eps_min(), chart_width: None }
    }
}

fn layout_of(g: &GroupoidInstance) -> Result<Layout> {
    Ok(match g.kind {
        InstanceKind::Line => Layout::D1(g.fiber_grid),
        _ => {
            let (a, b) = g.arrow_grids()?;
            Layout::D2(a, b)
        }
    })
}

/// Hull of the targets of `supp(phi)`: the momentum image for `G` acting on itself.
pub fn target_hull(g: &GroupoidInstance, phi: &GridFn) -> Result<Option<Interval>> {
    match (g.kind, phi) {
        (InstanceKind::Line, _) => Ok(phi.as_1d().and_then(|f| f.support()).map(|_| Interval::new(0.0, 0.0))),
        (InstanceKind::Pair, GridFn::D2(f)) => Ok(f.support().map(|s| s.axis1)),
        (InstanceKind::Transformation, GridFn::D2(f)) => {
            let Some(s) = f.support() else { return Ok(None) };
            let (ts, bs) = (s.axis0, s.axis1);
            let ends = [g.flow.flow(ts.lo, bs.lo)?, g.flow.flow(ts.hi, bs.lo)?, g.flow.flow(ts.lo, bs.hi)?, g.flow.flow(ts.hi, bs.hi)?];
            Ok(Some(Interval::new(ends[0].min(ends[1]), ends[2].max(ends[3]))))
        }
        _ => Err(Error::invalid("phi does not match the groupoid")),
    }
}

/// `theta_W(f1 (x) chi)`: a function on `G` whose representation agrees with
/// that of `f1` along the frame flow on everything with targets in `k_set`.
pub fn assemble_horrid(
    g: &GroupoidInstance,
    transfer: &ChartTransfer,
    f1: &AnalyticFn1D,
    chi: &AnalyticFn1D,
    k_set: Interval,
) -> Result<GridFn> {
    let eps = transfer.window.eps;
    if let Some(s) = f1.support() {
        if !(s.lo > -eps && s.hi < eps) {
            return Err(Error::Precondition(format!("kernel support {s} is not inside (-{eps}, {eps})")));
        }
    }
    if g.kind == InstanceKind::Line {
        return Ok(GridFn::D1(GridFn1D::sample(f1, g.fiber_grid)?));
    }
    let mut worst: (f64, f64) = (0.0, k_set.lo);
    for b in g.base_grid.xs().into_iter().filter(|b| k_set.contains(*b)).chain([k_set.lo, k_set.hi]) {
        let d = (chi.eval(b) - 1.0).abs();
        if d > worst.0 {
            worst = (d, b);
        }
    }
    if worst.0 > 0.0 {
        return Err(Error::CutoffNotUnity { defect: worst.0, at: worst.1 });
    }
    let (Some(sf), Some(sc)) = (f1.support(), chi.support()) else {
        let (a, b) = g.arrow_grids()?;
        return Ok(GridFn::D2(GridFn2D::zeros(a, b)));
    };
    let prod = |t: f64, b: f64| f1.eval(t) * chi.eval(b);
    let cf = ChartFn { f: &prod, support: Box2::new(sf, sc) };
    Ok(GridFn::D2(transfer.theta(g, &cf)?))
}

/// Bump-built partition of unity subordinate to overlapping windows covering
/// `k_set`: pieces are differences of consecutive smooth steps, so they sum to
/// one on `k_set`. Returns `(piece, window)` pairs.
pub fn partition_of_unity(k_set: Interval, pieces: usize, ramp: f64) -> Result<Vec<(AnalyticFn1D, Interval)>> {
    if pieces == 0 || !(ramp > 0.0) {
        return Err(Error::invalid("need at least one piece and a positive ramp"));
    }
    let w = k_set.width() / pieces as f64;
    // step rising over [lo, lo + ramp]
    let step = |lo: f64| AnalyticFn1D::smooth_step().compose_affine(1.0 / ramp, 1.0 - lo / ramp);
    let mut edges = Vec::with_capacity(pieces + 1);
    edges.push(k_set.lo - ramp);
    for m in 1..pieces {
        edges.push(k_set.lo + m as f64 * w - ramp / 2.0);
    }
    edges.push(k_set.hi);
    let mut out = Vec::with_capacity(pieces);
    for m in 0..pieces {
        let (a, b) = (edges[m], edges[m + 1]);
        let piece = step(a)?.add(&step(b)?.scale(-1.0)).clip(Interval::new(a, b + ramp));
        out.push((piece, Interval::new(a, b + ramp)));
    }
    Ok(out)
}

/// `k_set` plus the margin, kept far enough inside the base that `u(W)` stays
/// on the arrow grid (pair arrows move their target by up to `eps`).
fn auto_window(g: &GroupoidInstance, k_set: Interval, cfg: &GroupoidFacConfig) -> Interval {
    let room = match g.kind {
        InstanceKind::Pair => g.base.expand(-cfg.line.eps * g.flow.field().bound_on(g.base).unwrap_or(1.0)),
        _ => g.base,
    };
    k_set.expand(cfg.window_margin).intersect(&room).unwrap_or(k_set)
}

fn check_window(k: Interval, u: Interval) -> Result<()> {
    if !u.interior_contains(&k) {
        return Err(Error::Precondition(format!("base window {u} does not contain the targets {k} of supp(phi) in its interior")));
    }
    Ok(())
}

/// Chart transfer on `(-eps, eps) x U`, halving `eps` until the injectivity
/// check passes.
fn transfer_with_bisection(g: &GroupoidInstance, eps: f64, u: Interval, eps_min: f64) -> Result<ChartTransfer> {
    let mut e = eps;
    loop {
        match build_chart_transfer(g, ChartWindow { eps: e, base: u }) {
            Ok(t) => return Ok(t),
            Err(Error::NotInjective { .. }) if e / 2.0 >= eps_min => e /= 2.0,
            Err(err) => return Err(err),
        }
    }
}

/// `phi = sum_i f_i * psi_i` in the convolution algebra of `g`, with
/// `supp(psi_i)` inside `supp(phi)` and `supp(f_i)` inside `u(W)`.
pub fn groupoid_factorize(g: &GroupoidInstance, phi: &PhiSource, cfg: &GroupoidFacConfig) -> Result<FactorizationResult> {
    let layout = layout_of(g)?;
    let phi_g = phi.sample(layout)?;
    let Some(k_set) = target_hull(g, &phi_g)? else {
        return Ok(FactorizationResult {
            mode: cfg.line.mode,
            eps: cfg.line.eps,
            pairs: Vec::new(),
            residual: phi_g.clone(),
            phi: phi_g,
            residual_sup: 0.0,
            residual_l2: 0.0,
            certificates: Vec::new(),
            base_window: cfg.base_window,
        });
    };
    if g.kind == InstanceKind::Line {
        return factorize_single(g, phi, &phi_g, layout, cfg, k_set, Interval::new(-1.0, 1.0));
    }
    if let (Some(width), None) = (cfg.chart_width, cfg.base_window) {
        if k_set.width() > width {
            return factorize_partitioned(g, phi, &phi_g, layout, cfg, k_set, width);
        }
    }
    let u = match cfg.base_window {
        Some(u) => u,
        None => auto_window(g, k_set, cfg),
    };
    check_window(k_set, u)?;
    factorize_single(g, phi, &phi_g, layout, cfg, k_set, u)
}

fn factorize_single(
    g: &GroupoidInstance,
    phi: &PhiSource,
    phi_g: &GridFn,
    layout: Layout,
    cfg: &GroupoidFacConfig,
    k_set: Interval,
    u: Interval,
) -> Result<FactorizationResult> {
    let transfer = transfer_with_bisection(g, cfg.line.eps, u, cfg.eps_min)?;
    let mut line_cfg = cfg.line;
    line_cfg.eps = transfer.window.eps;
    let action = LineAction::self_left(g);
    let line = linefac(phi, layout, &action, &line_cfg)?;
    let chi = if g.kind == InstanceKind::Line {
        AnalyticFn1D::constant(1.0)
    } else {
        AnalyticFn1D::plateau(k_set, u)?
    };
    let mut pairs = Vec::with_capacity(line.pairs.len());
    for p in line.pairs {
        let f = assemble_horrid(g, &transfer, &p.kernel, &chi, k_set)?;
        pairs.push(FactorPair { kernel: p.kernel, f, psi: p.psi });
    }
    finish(g, phi_g.clone(), pairs, &[(transfer, 0..usize::MAX)], line_cfg, Some(u))
}

fn factorize_partitioned(
    g: &GroupoidInstance,
    phi: &PhiSource,
    phi_g: &GridFn,
    layout: Layout,
    cfg: &GroupoidFacConfig,
    k_set: Interval,
    width: f64,
) -> Result<FactorizationResult> {
    let pieces = (k_set.width() / width).ceil() as usize;
    let ramp = 0.5 * k_set.width() / pieces as f64;
    let mut pairs = Vec::new();
    let mut transfers = Vec::new();
    let mut eps_used = cfg.line.eps;
    for (piece, window) in partition_of_unity(k_set, pieces, ramp)? {
        let part = multiply_by_target_fn(g, phi, layout, &piece)?;
        let part_g = part.sample(layout)?;
        let Some(kp) = target_hull(g, &part_g)? else { continue };
        let u = auto_window(g, kp.intersect(&window).unwrap_or(kp), cfg);
        check_window(kp, u)?;
        let sub = factorize_single(g, &part, &part_g, layout, cfg, kp, u)?;
        eps_used = eps_used.min(sub.eps);
        let start = pairs.len();
        pairs.extend(sub.pairs);
        transfers.push((transfer_with_bisection(g, sub.eps, u, cfg.eps_min)?, start..pairs.len()));
    }
    let mut line_cfg = cfg.line;
    line_cfg.eps = eps_used;
    finish(g, phi_g.clone(), pairs, &transfers, line_cfg, None)
}

/// `phi (p o t)` for the target map of the self-action.
fn multiply_by_target_fn(g: &GroupoidInstance, phi: &PhiSource, layout: Layout, p: &AnalyticFn1D) -> Result<PhiSource> {
    match (g.kind, phi) {
        (InstanceKind::Pair, PhiSource::Terms(terms)) => {
            Ok(PhiSource::Terms(terms.iter().map(|(a, b)| (a.clone(), b.mul(p))).collect()))
        }
        _ => {
            let GridFn::D2(f) = phi.sample(layout)? else { return Err(Error::invalid("two-dimensional groupoid expected")) };
            let flow = g.flow.clone();
            let kind = g.kind;
            let w = f.weighted(move |x, y| match kind {
                InstanceKind::Pair => p.eval(y),
                _ => p.eval(flow.flow(x, y).unwrap_or(f64::NAN)),
            })?;
            Ok(PhiSource::Sampled(GridFn::D2(w)))
        }
    }
}

fn finish(
    g: &GroupoidInstance,
    phi_g: GridFn,
    pairs: Vec<FactorPair>,
    transfers: &[(ChartTransfer, std::ops::Range<usize>)],
    cfg: LineFacConfig,
    base_window: Option<Interval>,
) -> Result<FactorizationResult> {
    let residual = residual_of(g, &phi_g, &pairs)?;
    let phi_support = support_of(&phi_g);
    let certificates = pairs
        .iter()
        .enumerate()
        .map(|(index, p)| {
            let transfer = &transfers.iter().find(|(_, r)| r.contains(&index)).expect("every pair has a chart").0;
            PairCertificate {
                index,
                psi_in_phi: nonzero_inside(&p.psi, phi_support),
                f_in_window: f_in_chart(&p.f, transfer),
                psi_support: support_summary(&p.psi),
                f_support: support_summary(&p.f),
            }
        })
        .collect();
    Ok(FactorizationResult {
        mode: cfg.mode,
        eps: cfg.eps,
        residual_sup: residual.sup_norm(),
        residual_l2: residual.l2_norm(),
        residual,
        phi: phi_g,
        pairs,
        certificates,
        base_window,
    })
}

/// Every nonzero sample of `f` is an arrow `u(t, b)` with `(t, b)` in the window.
fn f_in_chart(f: &GridFn, transfer: &ChartTransfer) -> bool {
    match f {
        GridFn::D1(k) => k.samples().iter().enumerate().all(|(i, v)| *v == 0.0 || k.x(i).abs() < transfer.window.eps),
        GridFn::D2(h) => {
            let (g0, g1) = h.grids();
            let n1 = g1.n;
            h.samples().iter().enumerate().all(|(idx, v)| {
                *v == 0.0
                    || matches!(transfer.u_inv((g0.x(idx / n1), g1.x(idx % n1))), Some((t, b)) if transfer.window.contains(t, b))
            })
        }
    }
}

fn residual_of(g: &GroupoidInstance, phi: &GridFn, pairs: &[FactorPair]) -> Result<GridFn> {
    let mut recon = phi.zeros_like();
    for p in pairs {
        recon = recon.add(&integrated_rep(g, GroupoidAction::SelfLeft, &p.f, &p.psi)?)?;
    }
    phi.sub(&recon)
}

/// Recomputes `||phi - sum_i f_i * psi_i||_inf` from the stored factors alone.
pub fn verify_factorization(g: &GroupoidInstance, phi: &GridFn, pairs: &[FactorPair]) -> Result<f64> {
    Ok(residual_of(g, phi, pairs)?.sup_norm())
}
