use super::module::{anchor_values, in_target_chart_with, module_factorize_with, FlowTable, Side};
use super::order::{vanishing_order, Order, OrderEstimate};
use crate::error::{Error, Result};
use crate::factorize::{groupoid_factorize, FactorMode, GroupoidFacConfig, LineFacConfig, PhiSource};
use crate::gridfn::io::write_atomic;
use crate::gridfn::{AnalyticFn1D, Box2, GridFn, GridFn2D, Interval};
use crate::groupoid::{convolve, FieldSpec, GroupoidInstance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdealTolerances {
    /// Forward trials need order `>= p + q - forward_slack`.
    #[serde(default = "default_forward_slack")]
    pub forward_slack: f64,
    /// Reverse factors need orders `>= p - factor_slack`, `>= q - factor_slack`.
    #[serde(default = "default_factor_slack")]
    pub factor_slack: f64,
    #[serde(default = "default_reverse_residual")]
    pub reverse_residual: f64,
}

fn default_forward_slack() -> f64 {
    0.3
}
fn default_factor_slack() -> f64 {
    0.2
}
fn default_reverse_residual() -> f64 {
    1e-3
}

impl Default for IdealTolerances {
    fn default() -> Self {
        IdealTolerances { forward_slack: default_forward_slack(), factor_slack: default_factor_slack(), reverse_residual: default_reverse_residual() }
    }
}

/// Product experiment on the transformation groupoid of `a = tanh^k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdealConfig {
    pub k: u32,
    pub p: Order,
    pub q: Order,
    pub trials: usize,
    pub seed: u64,
    /// Half-width of the base box.
    #[serde(default = "default_base_radius")]
    pub base_radius: f64,
    #[serde(default = "default_fiber_radius")]
    pub fiber_radius: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Base spacing; flat runs default to half of it.
    #[serde(default)]
    pub db: Option<f64>,
    /// Chart half-width of the middle factorization.
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default)]
    pub tolerances: IdealTolerances,
}

fn default_base_radius() -> f64 {
    4.0
}
fn default_fiber_radius() -> f64 {
    2.5
}
fn default_dt() -> f64 {
    5e-3
}
fn default_eps() -> f64 {
    1.0
}

impl IdealConfig {
    pub fn new(k: u32, p: Order, q: Order, trials: usize, seed: u64) -> Self {
        IdealConfig {
            k,
            p,
            q,
            trials,
            seed,
            base_radius: default_base_radius(),
            fiber_radius: default_fiber_radius(),
            dt: default_dt(),
            db: None,
            eps: default_eps(),
            tolerances: IdealTolerances::default(),
        }
    }

    pub fn flat(&self) -> bool {
        self.p.is_infinite() || self.q.is_infinite()
    }

    pub fn base_spacing(&self) -> f64 {
        self.db.unwrap_or(if self.flat() { 5e-3 } else { 1e-2 })
    }

    pub fn instance(&self) -> Result<GroupoidInstance> {
        if self.k == 0 {
            return Err(Error::invalid("k must be at least 1 so that 0 is a fixed point of the flow"));
        }
        GroupoidInstance::transformation(
            Interval::symmetric(self.base_radius),
            self.fiber_radius,
            self.dt,
            self.base_spacing(),
            FieldSpec::TanhPower { tanh_k: self.k },
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Reverse,
}

/// One line of the report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdealRow {
    pub trial: usize,
    pub k: u32,
    pub p: Order,
    pub q: Order,
    pub direction: Direction,
    /// Forward: order of `f * g`. Reverse: order of `h`.
    pub measured_order: f64,
    pub flat: bool,
    /// Reverse only: `|h - sum u_i * v_i|_inf`.
    pub residual: Option<f64>,
    /// Reverse only: smallest orders over the left and right factors.
    pub order_u: Option<f64>,
    pub order_v: Option<f64>,
    pub pass: bool,
    pub note: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdealReport {
    pub pass: bool,
    pub trials: usize,
    pub config: IdealConfig,
    pub seed: u64,
    #[serde(skip)]
    pub rows: Vec<IdealRow>,
}

impl IdealReport {
    pub fn csv_bytes(&self) -> Result<Vec<u8>> {
        let mut out = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            out.serialize(r)?;
        }
        out.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    pub fn json_bytes(&self) -> Result<Vec<u8>> {
        let mut v = serde_json::to_vec_pretty(self)?;
        v.push(b'\n');
        Ok(v)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_atomic(&dir.join("ideals.csv"), &self.csv_bytes()?)?;
        write_atomic(&dir.join("ideals_summary.json"), &self.json_bytes()?)
    }
}

/// `b^p`, or `exp(-1/b^2)` for infinite order.
fn transverse_weight(p: Order) -> AnalyticFn1D {
    match p {
        Order::Finite(p) => AnalyticFn1D::monomial(p),
        Order::Infinite => AnalyticFn1D::flat_exp(),
    }
}

/// Random `w(b) u(t) v(b)` with `w` vanishing to order `p` and `v(0) != 0`.
fn random_member(g: &GroupoidInstance, rng: &mut ChaCha8Rng, p: Order) -> Result<GridFn2D> {
    let (tg, bg) = g.arrow_grids()?;
    let rt = rng.gen_range(0.5..0.8);
    let ct = rng.gen_range(-0.3..0.3);
    let rb = rng.gen_range(1.5..2.3);
    let cb = rng.gen_range(-0.3..0.3);
    let u = AnalyticFn1D::bump_on(ct, rt)?;
    let v = AnalyticFn1D::bump_on(cb, rb)?.mul(&transverse_weight(p));
    let support = Box2::new(Interval::new(ct - rt, ct + rt), Interval::new(cb - rb, cb + rb));
    GridFn2D::from_fn(tg, bg, Some(support), |t, b| u.eval(t) * v.eval(b))
}

fn order_ok(est: &OrderEstimate, required: Order, slack: f64) -> bool {
    est.at_least(required, slack)
}

fn forward_trial(g: &GroupoidInstance, cfg: &IdealConfig, trial: usize) -> Result<IdealRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(2 * trial as u64));
    let f = random_member(g, &mut rng, cfg.p)?;
    let h = random_member(g, &mut rng, cfg.q)?;
    let GridFn::D2(prod) = convolve(g, &GridFn::D2(f), &GridFn::D2(h))? else { unreachable!() };
    let est = vanishing_order(&prod, 1)?;
    let pass = order_ok(&est, cfg.p.plus(cfg.q), cfg.tolerances.forward_slack);
    Ok(IdealRow {
        trial,
        k: cfg.k,
        p: cfg.p,
        q: cfg.q,
        direction: Direction::Forward,
        measured_order: est.p_hat,
        flat: est.flat_flag,
        residual: None,
        order_u: None,
        order_v: None,
        pass,
        note: String::new(),
    })
}

/// `h = (g_t o t) k (g_s o s)`, `k = sum f_i * psi_i`, so
/// `h = sum ((g_t o t) f_i) * (psi_i (g_s o s))`.
fn reverse_trial(g: &GroupoidInstance, table: &FlowTable, cfg: &IdealConfig, trial: usize) -> Result<IdealRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(2 * trial as u64 + 1));
    let total = cfg.p.plus(cfg.q);
    let h = random_member(g, &mut rng, total)?;
    let h_order = vanishing_order(&h, 1)?;
    let left = module_factorize_with(g, &h, cfg.p, cfg.q, Side::Target, Some(table))?;
    let right = module_factorize_with(g, &left.rest, cfg.q, Order::Finite(0), Side::Source, Some(table))?;
    let middle = right.rest.clone();
    let line = LineFacConfig::new(cfg.eps, FactorMode::Ck { k: 0 }).with_kernel_dx(cfg.dt);
    let fac = groupoid_factorize(g, &PhiSource::Sampled(GridFn::D2(middle)), &GroupoidFacConfig::new(line))?;
    let targets = anchor_values(g, Side::Target, Some(table))?;
    let (tg, bg) = g.arrow_grids()?;
    let gt: Vec<f64> = targets.iter().map(|x| left.base.eval(*x)).collect();
    let mut recon = GridFn2D::zeros(tg, bg);
    let (mut order_u, mut order_v) = (f64::INFINITY, f64::INFINITY);
    let (mut flat_u, mut flat_v) = (true, true);
    for pair in &fac.pairs {
        let (Some(fi), Some(psi)) = (pair.f.as_2d(), pair.psi.as_2d()) else { return Err(Error::invalid("expected arrow functions")) };
        let u = GridFn2D::truncated(tg, bg, fi.samples().iter().zip(&gt).map(|(a, b)| a * b).collect(), fi.support())?;
        let v = psi.weighted(|_, b| right.base.eval(b))?;
        // u is a pullback by the target map, so its order is read off in
        // target coordinates; the flow stretches b by up to exp(|t|)
        let (ou, ov) = (vanishing_order(&in_target_chart_with(g, &u, table)?, 1)?, vanishing_order(&v, 1)?);
        order_u = order_u.min(ou.p_hat);
        order_v = order_v.min(ov.p_hat);
        flat_u &= ou.flat_flag;
        flat_v &= ov.flat_flag;
        let GridFn::D2(c) = convolve(g, &GridFn::D2(u), &GridFn::D2(v))? else { unreachable!() };
        recon = recon.add(&c)?;
    }
    let residual = h.sub(&recon)?.sup_norm();
    let tol = &cfg.tolerances;
    let u_ok = match cfg.p {
        Order::Infinite => flat_u,
        Order::Finite(p) => flat_u || order_u >= p as f64 - tol.factor_slack,
    };
    let v_ok = match cfg.q {
        Order::Infinite => flat_v,
        Order::Finite(q) => flat_v || order_v >= q as f64 - tol.factor_slack,
    };
    Ok(IdealRow {
        trial,
        k: cfg.k,
        p: cfg.p,
        q: cfg.q,
        direction: Direction::Reverse,
        measured_order: h_order.p_hat,
        flat: h_order.flat_flag,
        residual: Some(residual),
        order_u: Some(order_u),
        order_v: Some(order_v),
        pass: residual <= tol.reverse_residual && u_ok && v_ok && !fac.pairs.is_empty(),
        note: format!("module defects {:.1e}, {:.1e}; middle residual {:.1e} of {:.1e}", left.defect, right.defect, fac.residual_sup, right.rest.sup_norm()),
    })
}

fn failed_row(cfg: &IdealConfig, trial: usize, direction: Direction, e: Error) -> IdealRow {
    IdealRow {
        trial,
        k: cfg.k,
        p: cfg.p,
        q: cfg.q,
        direction,
        measured_order: f64::NAN,
        flat: false,
        residual: None,
        order_u: None,
        order_v: None,
        pass: false,
        note: e.to_string(),
    }
}

/// Forward trials: `f in J_p`, `g in J_q` give `f * g in J_{p+q}`. Reverse
/// trials: `h in J_{p+q}` is written as `sum u_i * v_i` with `u_i in J_p`,
/// `v_i in J_q`. Trials run in parallel and are reported in order; a failing
/// trial is recorded, not propagated.
pub fn ideal_product_experiment(cfg: &IdealConfig) -> Result<IdealReport> {
    if cfg.trials == 0 {
        return Err(Error::invalid("at least one trial is required"));
    }
    let g = cfg.instance()?;
    let table = FlowTable::new(&g)?;
    let jobs: Vec<(usize, Direction)> = (0..cfg.trials).flat_map(|t| [(t, Direction::Forward), (t, Direction::Reverse)]).collect();
    let rows: Vec<IdealRow> = jobs
        .into_par_iter()
        .map(|(t, d)| {
            let r = match d {
                Direction::Forward => forward_trial(&g, cfg, t),
                Direction::Reverse => reverse_trial(&g, &table, cfg, t),
            };
            r.unwrap_or_else(|e| failed_row(cfg, t, d, e))
        })
        .collect();
    Ok(IdealReport { pass: rows.iter().all(|r| r.pass), trials: cfg.trials, config: *cfg, seed: cfg.seed, rows })
}
