use super::config::{CommandConfig, Dm1dConfig, FactorizeConfig, RunConfig, SplittingSpec};
use crate::error::{Error, Result};
use crate::factorize::groupoid_factorize;
use crate::gridfn::io::{save_1d, save_2d, write_atomic};
use crate::gridfn::{GridFn, Interval};
use crate::groupoid::GroupoidInstance;
use crate::ideals::{ideal_product_experiment, IdealConfig};
use crate::kernels1d::{
    build_ck_pair, build_dm_generators, random_test_functions, standard_test_functions, weak_delta_residual, DeltaSplitting,
    TestFunction,
};
use rayon::prelude::*;
use serde::Serialize;
use std::path::Path;

/// Result of a command that ran to completion.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub pass: bool,
    pub summary: String,
}

/// Runs a configuration and writes its outputs, including the resolved
/// configuration as `config.json`.
pub fn execute(run: &RunConfig) -> Result<Outcome> {
    let out = run.output.as_path();
    std::fs::create_dir_all(out)?;
    write_atomic(&out.join("config.json"), &run.to_json()?)?;
    match &run.command {
        CommandConfig::Dm1d(c) => dm1d(c, run.seed, out),
        CommandConfig::Factorize(c) => {
            let d = run.instance.as_ref().ok_or_else(|| Error::invalid("factorize needs an instance descriptor"))?;
            factorize(&GroupoidInstance::from_descriptor(d)?, c, out)
        }
        CommandConfig::Ideals(c) => ideals(&IdealConfig { seed: run.seed, ..*c }, out),
    }
}

#[derive(Debug, Serialize)]
struct Dm1dRow {
    test: usize,
    dx: f64,
    residual: f64,
    residual_cutoff: Option<f64>,
}

#[derive(Serialize)]
struct Dm1dSummary {
    pass: bool,
    monotone: bool,
    max_residual: f64,
    max_cutoff_finest: Option<f64>,
    rows: usize,
}

enum Splitting {
    Ck(crate::kernels1d::CkPair),
    Dm(crate::kernels1d::DmGenerators),
}

impl Splitting {
    fn residuals(&self, w: &TestFunction) -> Result<(f64, Option<f64>)> {
        match self {
            Splitting::Ck(p) => Ok((weak_delta_residual(p, w)?, None)),
            Splitting::Dm(d) => {
                let exact = weak_delta_residual(&d.uncut() as &dyn DeltaSplitting, w)?;
                Ok((exact, Some(weak_delta_residual(d, w)?)))
            }
        }
    }

    fn info_json(&self) -> Result<Vec<u8>> {
        let mut v = match self {
            Splitting::Ck(p) => serde_json::to_vec_pretty(&p.info())?,
            Splitting::Dm(d) => serde_json::to_vec_pretty(&d.info())?,
        };
        v.push(b'\n');
        Ok(v)
    }
}

fn test_set(count: usize, seed: u64, dx: f64) -> Result<Vec<TestFunction>> {
    let mut tests: Vec<TestFunction> = standard_test_functions(dx)?.into_iter().take(count).collect();
    if count > tests.len() {
        tests.extend(random_test_functions(count - tests.len(), seed, dx)?);
    }
    Ok(tests)
}

/// Weak delta residuals of one splitting over a set of test functions and a
/// ladder of spacings.
pub fn dm1d(cfg: &Dm1dConfig, seed: u64, out: &Path) -> Result<Outcome> {
    cfg.validate()?;
    let split = match cfg.splitting {
        SplittingSpec::Ck { k, cut } => Splitting::Ck(build_ck_pair(k, Interval::new(cut[0], cut[1]))?),
        SplittingSpec::Dm { j, eps, growth } => Splitting::Dm(build_dm_generators(j, growth, eps)?),
    };
    let mut jobs = Vec::new();
    for dx in cfg.spacings() {
        for (i, w) in test_set(cfg.tests, seed, dx)?.into_iter().enumerate() {
            jobs.push((i, dx, w));
        }
    }
    let rows = jobs
        .par_iter()
        .map(|(i, dx, w)| {
            let (residual, residual_cutoff) = split.residuals(w)?;
            Ok(Dm1dRow { test: *i, dx: *dx, residual, residual_cutoff })
        })
        .collect::<Result<Vec<_>>>()?;

    let tol = cfg.tolerances;
    let max_residual = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    let finest = *cfg.spacings().last().expect("levels >= 1");
    let max_cutoff_finest =
        rows.iter().filter(|r| r.dx == finest).filter_map(|r| r.residual_cutoff).reduce(f64::max);
    let monotone = (0..cfg.tests).all(|t| {
        let col: Vec<f64> = rows.iter().filter(|r| r.test == t).map(|r| r.residual).collect();
        col.windows(2).all(|w| w[1] <= w[0] || w[1] <= tol.noise_floor)
    });
    let pass = rows.iter().all(|r| r.residual.is_finite() && r.residual <= tol.residual)
        && max_cutoff_finest.is_none_or(|c| c <= tol.cutoff)
        && monotone;

    let mut csv = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        csv.serialize(r)?;
    }
    write_atomic(&out.join("residuals.csv"), &csv.into_inner().map_err(|e| Error::Io(e.into_error()))?)?;
    write_atomic(&out.join("generators.json"), &split.info_json()?)?;
    let summary = Dm1dSummary { pass, monotone, max_residual, max_cutoff_finest, rows: rows.len() };
    let mut s = serde_json::to_vec_pretty(&summary)?;
    s.push(b'\n');
    write_atomic(&out.join("dm1d_summary.json"), &s)?;
    Ok(Outcome {
        pass,
        summary: format!(
            "dm1d: {} rows, max residual {max_residual:.3e}, cutoff at finest {}, monotone {monotone}",
            rows.len(),
            max_cutoff_finest.map_or("n/a".into(), |c| format!("{c:.3e}"))
        ),
    })
}

fn save(f: &GridFn, dir: &Path, stem: &str) -> Result<()> {
    match f {
        GridFn::D1(g) => save_1d(g, dir, stem),
        GridFn::D2(g) => save_2d(g, dir, stem),
    }
}

/// Factorizes a function on a groupoid and writes the factors and a manifest.
pub fn factorize(g: &GroupoidInstance, cfg: &FactorizeConfig, out: &Path) -> Result<Outcome> {
    let phi = cfg.phi.source(g.kind)?;
    let r = groupoid_factorize(g, &phi, &cfg.factorization)?;
    let manifest = r.manifest(cfg.tolerances.residual);
    for (i, p) in r.pairs.iter().enumerate() {
        save(&p.f, out, &format!("f_{i}"))?;
        save(&p.psi, out, &format!("psi_{i}"))?;
    }
    save(&r.residual, out, "residual")?;
    let mut m = serde_json::to_vec_pretty(&manifest)?;
    m.push(b'\n');
    write_atomic(&out.join("manifest.json"), &m)?;
    Ok(Outcome {
        pass: manifest.pass,
        summary: format!(
            "factorize {}: {} pairs, residual {:.3e} (ceiling {:.1e}), certificates {}",
            cfg.mode_label(),
            manifest.n_pairs,
            manifest.residual_sup,
            manifest.residual_ceiling,
            if r.certificates_hold() { "hold" } else { "FAIL" }
        ),
    })
}

pub fn ideals(cfg: &IdealConfig, out: &Path) -> Result<Outcome> {
    let report = ideal_product_experiment(cfg)?;
    report.write(out)?;
    let failed = report.rows.iter().filter(|r| !r.pass).count();
    Ok(Outcome {
        pass: report.pass,
        summary: format!("ideals k={} p={} q={}: {} rows, {failed} failed", cfg.k, cfg.p, cfg.q, report.rows.len()),
    })
}
