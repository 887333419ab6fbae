//! Command-line front end: each subcommand resolves its flags into a
//! [`RunConfig`], writes it next to its outputs, and runs it.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 usage or configuration error.

pub mod commands;
pub mod config;

pub use commands::{execute, Outcome};
pub use config::{
    CommandConfig, Dm1dConfig, Dm1dTolerances, FactorTolerances, FactorizeConfig, PhiSpec, RunConfig, SplittingSpec,
};

use crate::error::Error;
use crate::factorize::{FactorMode, GroupoidFacConfig, LineFacConfig};
use crate::gridfn::Interval;
use crate::groupoid::{FieldSpec, GridSpec, InstanceDescriptor, InstanceKind, OdeSpec};
use crate::ideals::{IdealConfig, Order};
use clap::{Args, Parser, Subcommand, ValueEnum};
use config::parse_pair;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERICAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "GROUPOID_DECONV_THREADS";

#[derive(Debug, Parser)]
#[command(name = "groupoid-deconv", version, about = "Convolution factorization on low-dimensional Lie groupoids")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a splitting of the delta function against test functions.
    Dm1d(Dm1dArgs),
    /// Factorize a function on a groupoid into a sum of convolution products.
    Factorize(FactorizeArgs),
    /// Run the ideal product experiment on a transformation groupoid.
    Ideals(IdealsArgs),
    /// Run a saved configuration.
    Run(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Ck,
    Dm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Line,
    Pair,
    Transformation,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the resolved configuration to this file and exit without running.
    #[arg(long)]
    pub save_config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Dm1dArgs {
    /// ck: finite-smoothness pair; dm: exponential-sum generators.
    #[arg(long, value_enum, default_value_t = ModeArg::Ck)]
    pub mode: ModeArg,
    /// Smoothness of the kernel in ck mode.
    #[arg(long, default_value_t = 3)]
    pub k: u32,
    /// Number of exponential terms in dm mode.
    #[arg(long = "J", short = 'J', default_value_t = 6)]
    pub j: usize,
    /// Support radius of the cutoff kernels in dm mode.
    #[arg(long, default_value_t = 1.0)]
    pub eps: f64,
    /// Ratio between consecutive exponential rates in dm mode.
    #[arg(long, default_value_t = 2.0)]
    pub growth: f64,
    /// Interval on which the ck step rises.
    #[arg(long, default_value = "0.5,1.5", allow_hyphen_values = true, value_parser = parse_pair)]
    pub cut: [f64; 2],
    /// Coarsest grid spacing.
    #[arg(long, default_value_t = 1e-3)]
    pub dx: f64,
    /// Number of resolutions, halving dx each time (default 1 for ck, 4 for dm).
    #[arg(long)]
    pub levels: Option<usize>,
    /// Number of test functions.
    #[arg(long, default_value_t = 5)]
    pub tests: usize,
    /// Ceiling on every residual (the exact form in dm mode).
    #[arg(long, default_value_t = 1e-5)]
    pub residual_ceiling: f64,
    /// Ceiling on the cutoff form in dm mode, applied at the finest resolution.
    #[arg(long, default_value_t = 1e-4)]
    pub cutoff_ceiling: f64,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct FactorizeArgs {
    /// Groupoid instance; ignored when --instance-file is given.
    #[arg(long, value_enum, default_value_t = KindArg::Pair)]
    pub instance: KindArg,
    /// JSON instance descriptor.
    #[arg(long)]
    pub instance_file: Option<PathBuf>,
    /// Vector field: zero, unit or tanh_k:K.
    #[arg(long, default_value = "unit")]
    pub field: String,
    /// Base interval lo,hi.
    #[arg(long, default_value = "-2,2", allow_hyphen_values = true, value_parser = parse_pair)]
    pub base: [f64; 2],
    /// Spacing along fibers.
    #[arg(long, default_value_t = 1e-2)]
    pub dx: f64,
    /// Spacing along the base (defaults to dx).
    #[arg(long)]
    pub base_dx: Option<f64>,
    /// Half-width of the fiber axis (flow time on transformation groupoids).
    #[arg(long, default_value_t = 2.5)]
    pub fiber_radius: f64,
    /// Function to factorize, e.g. `bump(0,0.8)*bump(0,0.8)` (see the README).
    #[arg(long)]
    pub phi: Option<String>,
    /// Base window of the chart.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_pair)]
    pub window: Option<[f64; 2]>,
    /// Widest base interval covered by one chart.
    #[arg(long)]
    pub chart_width: Option<f64>,
    /// Delta splitting behind the line kernels.
    #[arg(long, value_enum, default_value_t = ModeArg::Ck)]
    pub mode: ModeArg,
    /// Smoothness of the kernels in ck mode.
    #[arg(long, default_value_t = 0)]
    pub k: u32,
    /// Number of exponential terms in dm mode.
    #[arg(long = "J", short = 'J', default_value_t = 2)]
    pub j: usize,
    /// Chart half-width; the kernels are supported in (-eps, eps).
    #[arg(long, default_value_t = 1.0)]
    pub eps: f64,
    /// Spacing of the kernel quadrature grid.
    #[arg(long)]
    pub kernel_dx: Option<f64>,
    /// Ceiling on the sup-norm residual.
    #[arg(long, default_value_t = 1e-4)]
    pub ceiling: f64,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct IdealsArgs {
    /// Power of tanh in the vector field.
    #[arg(long, default_value_t = 1)]
    pub k: u32,
    /// Vanishing order of the left factor: an integer or inf.
    #[arg(long, default_value = "1", allow_hyphen_values = true, value_parser = parse_order)]
    pub p: Order,
    /// Vanishing order of the right factor: an integer or inf.
    #[arg(long, default_value = "1", allow_hyphen_values = true, value_parser = parse_order)]
    pub q: Order,
    /// Number of seeded trials; each gives one forward and one reverse row.
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    /// Spacing along flow time (default 5e-3).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Spacing along the base (default 1e-2, 5e-3 when an order is inf).
    #[arg(long)]
    pub db: Option<f64>,
    /// Ceiling on the reverse factorization residual (default 1e-3).
    #[arg(long)]
    pub reverse_residual: Option<f64>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Configuration file written by --save-config or by a previous run.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the output directory of the configuration.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_order(s: &str) -> Result<Order, String> {
    s.parse::<Order>().map_err(|e| e.to_string())
}

fn out_dir(common: &CommonArgs, name: &str) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from("out").join(name))
}

fn dm1d_config(a: &Dm1dArgs) -> RunConfig {
    let (splitting, levels) = match a.mode {
        ModeArg::Ck => (SplittingSpec::Ck { k: a.k, cut: a.cut }, a.levels.unwrap_or(1)),
        ModeArg::Dm => (SplittingSpec::Dm { j: a.j, eps: a.eps, growth: a.growth }, a.levels.unwrap_or(4)),
    };
    RunConfig {
        instance: None,
        command: CommandConfig::Dm1d(Dm1dConfig {
            splitting,
            dx: a.dx,
            levels,
            tests: a.tests,
            tolerances: Dm1dTolerances { residual: a.residual_ceiling, cutoff: a.cutoff_ceiling, ..Default::default() },
        }),
        output: out_dir(&a.common, "dm1d"),
        seed: a.common.seed,
    }
}

fn factorize_config(a: &FactorizeArgs) -> crate::Result<RunConfig> {
    let instance = match &a.instance_file {
        Some(p) => serde_json::from_slice::<InstanceDescriptor>(&std::fs::read(p)?)?,
        None => InstanceDescriptor {
            kind: match a.instance {
                KindArg::Line => InstanceKind::Line,
                KindArg::Pair => InstanceKind::Pair,
                KindArg::Transformation => InstanceKind::Transformation,
            },
            base_box: a.base,
            field: FieldSpec::parse(&a.field)?,
            grid: GridSpec { dx: a.dx, fiber_radius: a.fiber_radius, base_dx: a.base_dx },
            ode: OdeSpec::default(),
        },
    };
    let phi = PhiSpec(a.phi.clone().unwrap_or_else(|| {
        if instance.kind == InstanceKind::Line { "bump(0,0.8)" } else { "bump(0,0.8)*bump(0,0.8)" }.to_string()
    }));
    phi.validate(instance.kind)?;
    let mode = match a.mode {
        ModeArg::Ck => FactorMode::Ck { k: a.k },
        ModeArg::Dm => FactorMode::Dm { j: a.j },
    };
    let mut line = LineFacConfig::new(a.eps, mode);
    line.kernel_dx = a.kernel_dx;
    let mut factorization = GroupoidFacConfig::new(line);
    factorization.base_window = a.window.map(|[lo, hi]| Interval::new(lo, hi));
    factorization.chart_width = a.chart_width;
    Ok(RunConfig {
        instance: Some(instance),
        command: CommandConfig::Factorize(FactorizeConfig {
            phi,
            factorization,
            tolerances: FactorTolerances { residual: a.ceiling },
        }),
        output: out_dir(&a.common, "factorize"),
        seed: a.common.seed,
    })
}

fn ideals_config(a: &IdealsArgs) -> RunConfig {
    let mut c = IdealConfig::new(a.k, a.p, a.q, a.trials, a.common.seed);
    if let Some(dt) = a.dt {
        c.dt = dt;
    }
    c.db = a.db;
    if let Some(r) = a.reverse_residual {
        c.tolerances.reverse_residual = r;
    }
    RunConfig { instance: None, command: CommandConfig::Ideals(c), output: out_dir(&a.common, "ideals"), seed: a.common.seed }
}

/// Library errors caused by bad input map to exit code 2, the rest to 1.
pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) | Error::Json(_) => EXIT_USAGE,
        _ => EXIT_NUMERICAL,
    }
}

/// Reads the thread cap from the environment and installs it in the global pool.
fn configure_threads() -> Result<(), String> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let n: usize = v.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got `{v}`"))?;
            // a second call in the same process keeps the first pool
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            Ok(())
        }
        Err(_) => Ok(()),
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return EXIT_USAGE;
    }
    let (run, save_to) = match &cli.command {
        Command::Dm1d(a) => (Ok(dm1d_config(a)), a.common.save_config.clone()),
        Command::Factorize(a) => (factorize_config(a), a.common.save_config.clone()),
        Command::Ideals(a) => (Ok(ideals_config(a)), a.common.save_config.clone()),
        Command::Run(a) => (
            RunConfig::load(&a.config).map(|mut r| {
                if let Some(o) = &a.out {
                    r.output = o.clone();
                }
                r
            }),
            None,
        ),
    };
    let run = match run {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    if let Some(path) = save_to {
        return match run.to_json().and_then(|b| crate::gridfn::io::write_atomic(&path, &b)) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_NUMERICAL
            }
        };
    }
    match execute(&run) {
        Ok(o) => {
            println!("{}", o.summary);
            println!("{}: outputs in {}", if o.pass { "PASS" } else { "FAIL" }, run.output.display());
            if o.pass {
                EXIT_OK
            } else {
                EXIT_NUMERICAL
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}
