use super::phi::{Layout, PhiSource};
use super::{FactorPair, FactorizationResult, PairCertificate};
use crate::error::{Error, Result};
use crate::gridfn::{AnalyticFn1D, Box2, Grid1, GridFn, GridFn1D, Interval};
use crate::groupoid::{integrated_rep_line, LineAction};
use crate::kernels1d::{build_ck_pair, build_dm_generators};
use serde::{Deserialize, Serialize};

/// Which splitting of the delta function drives the factorization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum FactorMode {
    /// `delta = f^(k+2) + g` with `f` of class `C^k`.
    Ck { k: u32 },
    /// Exponential-sum generators with `J` rates, cut off to `(-eps, eps)`.
    Dm {
        #[serde(rename = "J")]
        j: usize,
    },
}

/// Highest derivative order taken by stencils on sampled inputs.
pub const STENCIL_ORDER_CAP: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFacConfig {
    pub eps: f64,
    pub mode: FactorMode,
    /// Cut interval of the Ck pair as fractions of `eps`.
    #[serde(default = "default_cut")]
    pub cut: [f64; 2],
    /// Rate growth of the exponential-sum generators.
    #[serde(default = "default_growth")]
    pub growth: f64,
    /// Spacing of the kernel quadrature grid; defaults to the spacing of `phi`
    /// along the action, capped at `eps / 1000`.
    #[serde(default)]
    pub kernel_dx: Option<f64>,
}

fn default_cut() -> [f64; 2] {
    [0.05, 0.95]
}

fn default_growth() -> f64 {
    2.0
}

impl LineFacConfig {
    pub fn new(eps: f64, mode: FactorMode) -> Self {
        LineFacConfig { eps, mode, cut: default_cut(), growth: default_growth(), kernel_dx: None }
    }

    pub fn with_kernel_dx(mut self, dx: f64) -> Self {
        self.kernel_dx = Some(dx);
        self
    }

    fn kernel_spacing(&self, axis_dx: f64) -> f64 {
        self.kernel_dx.unwrap_or(axis_dx.min(self.eps / 1000.0))
    }

    /// The two kernels and the derivative combinations they act on:
    /// `phi = pi(k_0) L phi + pi(k_1) phi` with `L = sum_n w_n X^n`.
    pub(crate) fn kernels(&self) -> Result<(AnalyticFn1D, AnalyticFn1D, Vec<(usize, f64)>)> {
        let eps = self.eps;
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::invalid(format!("eps must be positive, got {eps}")));
        }
        match self.mode {
            FactorMode::Ck { k } => {
                let [lo, hi] = self.cut;
                if !(0.0 < lo && lo < hi && hi < 1.0) {
                    return Err(Error::invalid(format!("relative cut [{lo}, {hi}] must lie inside (0, 1)")));
                }
                let pair = build_ck_pair(k, Interval::new(lo * eps, hi * eps))?;
                Ok((pair.f, pair.g, vec![(k as usize + 2, 1.0)]))
            }
            FactorMode::Dm { j } => {
                let gens = build_dm_generators(j, self.growth, eps)?;
                let ops = gens.b.iter().enumerate().map(|(k, bk)| (2 * k, if k % 2 == 0 { *bk } else { -bk })).collect();
                Ok((gens.f_cut, gens.g_corr, ops))
            }
        }
    }
}

fn action_axis_grid(action: &LineAction, layout: Layout) -> Result<Grid1> {
    match (action, layout) {
        (LineAction::Interval(_), Layout::D1(g)) => Ok(g),
        (LineAction::Fiber { axis: 0, .. }, Layout::D2(g, _)) => Ok(g),
        (LineAction::Fiber { axis: 1, .. }, Layout::D2(_, g)) => Ok(g),
        _ => Err(Error::invalid("action does not match the layout of phi")),
    }
}

/// Declared support of `psi` cut down to that of `phi`.
pub(crate) fn restrict_to_support_of(psi: &GridFn, phi: &GridFn) -> Result<GridFn> {
    match (psi, phi) {
        (GridFn::D1(p), GridFn::D1(f)) => Ok(GridFn::D1(match f.support() {
            Some(s) => p.restrict(s)?,
            None => GridFn1D::zeros(p.grid()),
        })),
        (GridFn::D2(p), GridFn::D2(f)) => Ok(GridFn::D2(match f.support() {
            Some(s) => p.restrict(s)?,
            None => crate::gridfn::GridFn2D::zeros(p.grid(0), p.grid(1)),
        })),
        _ => Err(Error::invalid("dimension mismatch")),
    }
}

/// Every nonzero sample of `f` lies at a node inside `support`.
pub(crate) fn nonzero_inside(f: &GridFn, support: Option<Box2OrInterval>) -> bool {
    match (f, support) {
        (GridFn::D1(g), s) => g.samples().iter().enumerate().all(|(i, v)| {
            *v == 0.0 || matches!(s, Some(Box2OrInterval::I(iv)) if iv.contains(g.x(i)))
        }),
        (GridFn::D2(g), s) => {
            let (g0, g1) = g.grids();
            let n1 = g1.n;
            g.samples().iter().enumerate().all(|(idx, v)| {
                *v == 0.0 || matches!(s, Some(Box2OrInterval::B(b)) if b.contains(g0.x(idx / n1), g1.x(idx % n1)))
            })
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum Box2OrInterval {
    I(Interval),
    B(Box2),
}

pub(crate) fn support_of(f: &GridFn) -> Option<Box2OrInterval> {
    match f {
        GridFn::D1(g) => g.support().map(Box2OrInterval::I),
        GridFn::D2(g) => g.support().map(Box2OrInterval::B),
    }
}

/// Interval summary of a support (axis 0 for boxes), for manifests.
pub(crate) fn support_summary(f: &GridFn) -> Option<Interval> {
    match f {
        GridFn::D1(g) => g.support(),
        GridFn::D2(g) => g.support().map(|b| b.axis0.hull(&b.axis1)),
    }
}

/// Kernel samples vanish at every node with `|x| >= eps`.
pub(crate) fn kernel_in_window(f: &GridFn1D, eps: f64) -> bool {
    f.samples().iter().enumerate().all(|(i, v)| *v == 0.0 || f.x(i).abs() < eps)
}

/// `phi = pi(f_0) psi_0 + pi(f_1) psi_1` along a flow of the line, with both
/// kernels supported in `(-eps, eps)` and both `psi_i` supported in `supp(phi)`.
pub fn linefac(phi: &PhiSource, layout: Layout, action: &LineAction, cfg: &LineFacConfig) -> Result<FactorizationResult> {
    let (k0, k1, ops) = cfg.kernels()?;
    let axis_grid = action_axis_grid(action, layout)?;
    let phi_g = phi.sample(layout)?;
    if phi_g.is_zero() {
        return Ok(FactorizationResult {
            mode: cfg.mode,
            eps: cfg.eps,
            pairs: Vec::new(),
            residual: phi_g.clone(),
            phi: phi_g,
            residual_sup: 0.0,
            residual_l2: 0.0,
            certificates: Vec::new(),
            base_window: None,
        });
    }
    if matches!(phi, PhiSource::Sampled(_)) {
        let top = ops.iter().map(|(n, _)| *n).max().unwrap_or(0);
        if top > STENCIL_ORDER_CAP {
            return Err(Error::invalid(format!(
                "sampled input needs derivatives of order {top}; stencils are capped at {STENCIL_ORDER_CAP}"
            )));
        }
    }
    let kdx = cfg.kernel_spacing(axis_grid.dx);
    let kgrid = Grid1::symmetric(cfg.eps, kdx)?;
    let parts = ops.iter().map(|(n, w)| Ok((*w, phi.apply_field(action, *n)?))).collect::<Result<Vec<_>>>()?;
    let psi0 = restrict_to_support_of(&PhiSource::combine(&parts)?.sample(layout)?, &phi_g)?;
    let psi1 = phi_g.clone();
    let pairs = vec![
        FactorPair { f: GridFn::D1(GridFn1D::sample(&k0, kgrid)?), kernel: k0, psi: psi0 },
        FactorPair { f: GridFn::D1(GridFn1D::sample(&k1, kgrid)?), kernel: k1, psi: psi1 },
    ];
    let mut recon = layout.zeros();
    for p in &pairs {
        let GridFn::D1(f) = &p.f else { unreachable!() };
        recon = recon.add(&integrated_rep_line(action, f, &p.psi)?)?;
    }
    let residual = phi_g.sub(&recon)?;
    let phi_support = support_of(&phi_g);
    let certificates = pairs
        .iter()
        .enumerate()
        .map(|(index, p)| {
            let GridFn::D1(f) = &p.f else { unreachable!() };
            PairCertificate {
                index,
                psi_in_phi: nonzero_inside(&p.psi, phi_support),
                f_in_window: kernel_in_window(f, cfg.eps),
                psi_support: support_summary(&p.psi),
                f_support: f.support(),
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
        base_window: None,
    })
}

/// One term of an iterated factorization along several flows:
/// `pi_1(f_1) ... pi_k(f_k) psi`.
#[derive(Clone, Debug)]
pub struct FrameTerm {
    pub kernels: Vec<GridFn1D>,
    pub psi: GridFn,
}

/// Iterated line factorization along up to two commuting flows; `2^k` terms.
pub fn frame_factorize(phi: &PhiSource, layout: Layout, actions: &[LineAction], cfg: &LineFacConfig) -> Result<(Vec<FrameTerm>, f64)> {
    if actions.is_empty() || actions.len() > 2 {
        return Err(Error::invalid(format!("frames of rank 1 or 2 are supported, got {}", actions.len())));
    }
    let (k0, k1, ops) = cfg.kernels()?;
    let phi_g = phi.sample(layout)?;
    let mut chains: Vec<(Vec<GridFn1D>, PhiSource)> = vec![(Vec::new(), phi.clone())];
    for action in actions {
        let kdx = cfg.kernel_spacing(action_axis_grid(action, layout)?.dx);
        let kgrid = Grid1::symmetric(cfg.eps, kdx)?;
        let (s0, s1) = (GridFn1D::sample(&k0, kgrid)?, GridFn1D::sample(&k1, kgrid)?);
        let mut next = Vec::with_capacity(chains.len() * 2);
        for (kernels, src) in chains {
            let parts = ops.iter().map(|(n, w)| Ok((*w, src.apply_field(action, *n)?))).collect::<Result<Vec<_>>>()?;
            let mut a = kernels.clone();
            a.push(s0.clone());
            next.push((a, PhiSource::combine(&parts)?));
            let mut b = kernels;
            b.push(s1.clone());
            next.push((b, src));
        }
        chains = next;
    }
    let mut terms = Vec::with_capacity(chains.len());
    let mut recon = layout.zeros();
    for (kernels, src) in chains {
        let psi = restrict_to_support_of(&src.sample(layout)?, &phi_g)?;
        let mut v = psi.clone();
        for (action, f) in actions.iter().zip(&kernels).rev() {
            v = integrated_rep_line(action, f, &v)?;
        }
        recon = recon.add(&v)?;
        terms.push(FrameTerm { kernels, psi });
    }
    Ok((terms, phi_g.sub(&recon)?.sup_norm()))
}
