use crate::error::{Error, Result};
use crate::factorize::{FactorMode, GroupoidFacConfig, PhiSource};
use crate::gridfn::io::{load_1d, load_2d};
use crate::gridfn::{AnalyticFn1D, GridFn};
use crate::groupoid::{InstanceDescriptor, InstanceKind};
use crate::ideals::IdealConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Everything needed to reproduce one command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default)]
    pub instance: Option<InstanceDescriptor>,
    pub command: CommandConfig,
    pub output: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum CommandConfig {
    Dm1d(Dm1dConfig),
    Factorize(FactorizeConfig),
    Ideals(IdealConfig),
}

impl RunConfig {
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        Ok(serde_json::from_slice(bytes)?)
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        let mut v = serde_json::to_vec_pretty(self)?;
        v.push(b'\n');
        Ok(v)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read(path)?)
    }
}

/// Which delta splitting `dm1d` checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum SplittingSpec {
    /// `delta = f^(k+2) + g` with the step rising on `cut`.
    Ck { k: u32, cut: [f64; 2] },
    /// Exponential-sum generators with `J` rates.
    Dm {
        #[serde(rename = "J")]
        j: usize,
        eps: f64,
        #[serde(default = "default_growth")]
        growth: f64,
    },
}

fn default_growth() -> f64 {
    2.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dm1dTolerances {
    /// Ceiling on the weak residual at every resolution.
    #[serde(default = "default_residual")]
    pub residual: f64,
    /// Ceiling on the cutoff form, applied at the finest resolution.
    #[serde(default = "default_cutoff")]
    pub cutoff: f64,
    /// Residuals below this are treated as equal when checking monotonicity.
    #[serde(default = "default_noise_floor")]
    pub noise_floor: f64,
}

fn default_residual() -> f64 {
    1e-5
}
fn default_cutoff() -> f64 {
    1e-4
}
fn default_noise_floor() -> f64 {
    1e-12
}

impl Default for Dm1dTolerances {
    fn default() -> Self {
        Dm1dTolerances { residual: default_residual(), cutoff: default_cutoff(), noise_floor: default_noise_floor() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dm1dConfig {
    pub splitting: SplittingSpec,
    /// Coarsest spacing; each further level halves it.
    pub dx: f64,
    pub levels: usize,
    /// Number of test functions: the fixed ones first, then seeded random bumps.
    pub tests: usize,
    #[serde(default)]
    pub tolerances: Dm1dTolerances,
}

impl Dm1dConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dx > 0.0 && self.dx.is_finite()) {
            return Err(Error::invalid(format!("dx must be positive, got {}", self.dx)));
        }
        if self.levels == 0 {
            return Err(Error::invalid("levels must be at least 1"));
        }
        if self.tests == 0 {
            return Err(Error::invalid("tests must be at least 1"));
        }
        if let SplittingSpec::Dm { j: 0, .. } = self.splitting {
            return Err(Error::invalid("J must be at least 1"));
        }
        Ok(())
    }

    pub fn spacings(&self) -> Vec<f64> {
        (0..self.levels).map(|l| self.dx / f64::powi(2.0, l as i32)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorTolerances {
    #[serde(default = "default_factor_residual")]
    pub residual: f64,
}

fn default_factor_residual() -> f64 {
    1e-4
}

impl Default for FactorTolerances {
    fn default() -> Self {
        FactorTolerances { residual: default_factor_residual() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorizeConfig {
    /// Function to factorize, in the syntax of [`PhiSpec`].
    pub phi: PhiSpec,
    pub factorization: GroupoidFacConfig,
    #[serde(default)]
    pub tolerances: FactorTolerances,
}

/// Textual description of the function to factorize.
///
/// `bump(c,r)` and `gbump(c,r,s)` (a gaussian of width `s` centered at `c`
/// times `bump(c,r)`) are one-dimensional factors; `zero` is the zero
/// function. Two-dimensional functions are sums of products, e.g.
/// `bump(0,0.8)*bump(0,0.8) + gbump(0.2,0.5,0.3)*bump(0,1)`. `file:DIR/STEM`
/// loads samples written by the grid I/O module.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhiSpec(pub String);

enum PhiAst {
    File(PathBuf),
    Terms(Vec<Vec<AnalyticFn1D>>),
}

fn parse_factor(s: &str) -> Result<AnalyticFn1D> {
    let s = s.trim();
    if s == "zero" {
        return Ok(AnalyticFn1D::zero());
    }
    let bad = || Error::invalid(format!("cannot parse factor `{s}`; expected bump(c,r), gbump(c,r,s) or zero"));
    let (name, rest) = s.split_once('(').ok_or_else(bad)?;
    let args = rest.strip_suffix(')').ok_or_else(bad)?;
    let args: Vec<f64> = args.split(',').map(|a| a.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_>>()?;
    if args.iter().any(|a| !a.is_finite()) {
        return Err(bad());
    }
    match (name.trim(), args.as_slice()) {
        ("bump", [c, r]) if *r > 0.0 => AnalyticFn1D::bump_on(*c, *r),
        ("gbump", [c, r, w]) if *r > 0.0 && *w > 0.0 => {
            Ok(AnalyticFn1D::gaussian().compose_affine(1.0 / w, -c / w)?.mul(&AnalyticFn1D::bump_on(*c, *r)?))
        }
        _ => Err(bad()),
    }
}

impl PhiSpec {
    fn parse(&self) -> Result<PhiAst> {
        let s = self.0.trim();
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(PhiAst::File(PathBuf::from(path)));
        }
        let terms = s
            .split('+')
            .map(|t| t.split('*').map(parse_factor).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(PhiAst::Terms(terms))
    }

    /// Checks the syntax and the number of factors per term.
    pub fn validate(&self, kind: InstanceKind) -> Result<()> {
        match self.parse()? {
            PhiAst::File(_) => Ok(()),
            PhiAst::Terms(terms) => {
                let want = if kind == InstanceKind::Line { 1 } else { 2 };
                match terms.iter().find(|t| t.len() != want) {
                    Some(t) => Err(Error::invalid(format!(
                        "each term needs {want} factor(s) on a {kind:?} instance, got {}",
                        t.len()
                    ))),
                    None => Ok(()),
                }
            }
        }
    }

    pub fn source(&self, kind: InstanceKind) -> Result<PhiSource> {
        self.validate(kind)?;
        match self.parse()? {
            PhiAst::File(path) => {
                let dir = path.parent().unwrap_or(Path::new("."));
                let stem = path
                    .file_name()
                    .and_then(|s| s.to_str())
                    .ok_or_else(|| Error::invalid(format!("bad file spec {}", path.display())))?;
                let f = if kind == InstanceKind::Line { GridFn::D1(load_1d(dir, stem)?) } else { GridFn::D2(load_2d(dir, stem)?) };
                Ok(PhiSource::Sampled(f))
            }
            PhiAst::Terms(terms) if kind == InstanceKind::Line => {
                Ok(PhiSource::Line(AnalyticFn1D::sum(terms.into_iter().map(|mut t| t.remove(0)).collect())))
            }
            PhiAst::Terms(terms) => Ok(PhiSource::Terms(
                terms
                    .into_iter()
                    .map(|mut t| {
                        let v = t.pop().expect("validated");
                        (t.pop().expect("validated"), v)
                    })
                    .collect(),
            )),
        }
    }
}

/// Parses `lo,hi`.
pub fn parse_pair(s: &str) -> std::result::Result<[f64; 2], String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected lo,hi, got `{s}`"))?;
    let lo: f64 = a.trim().parse().map_err(|_| format!("bad number `{a}`"))?;
    let hi: f64 = b.trim().parse().map_err(|_| format!("bad number `{b}`"))?;
    if !(lo < hi) {
        return Err(format!("need lo < hi, got {lo},{hi}"));
    }
    Ok([lo, hi])
}

impl FactorizeConfig {
    pub fn mode_label(&self) -> String {
        match self.factorization.line.mode {
            FactorMode::Ck { k } => format!("ck(k={k})"),
            FactorMode::Dm { j } => format!("dm(J={j})"),
        }
    }
}
