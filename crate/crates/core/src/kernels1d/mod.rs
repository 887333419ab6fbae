//! Weak splittings of the Dirac delta on the line.

mod ck;
mod dm;

pub use ck::{build_ck_pair, CkPair, CkPairInfo};
pub use dm::{build_dm_generators, from_rates, DmGenerators, DmGeneratorsInfo, UncutKernel, MAX_TERMS};

use crate::error::{Error, Result};
use crate::gridfn::{AnalyticFn1D, Grid1, GridFn1D};

/// A distribution written as a finite combination of kernels and derivatives
/// that should equal the Dirac delta at 0.
pub trait DeltaSplitting {
    /// Pairing with a test function.
    fn pair_with(&self, w: &TestFunction) -> Result<f64>;
}

/// `|<T, w> - w(0)|`.
pub fn weak_delta_residual(split: &dyn DeltaSplitting, w: &TestFunction) -> Result<f64> {
    Ok((split.pair_with(w)? - w.value_at_zero()?).abs())
}

/// Compactly supported smooth test function.
///
/// Closed-form test functions supply exact derivative samples; grid test
/// functions fall back to stencils, which lose accuracy quickly with order.
#[derive(Clone, Debug)]
pub enum TestFunction {
    Analytic { f: AnalyticFn1D, grid: Grid1 },
    Grid(GridFn1D),
}

impl TestFunction {
    pub fn analytic(f: AnalyticFn1D, grid: Grid1) -> Result<Self> {
        match f.support() {
            Some(s) if s.is_bounded() => Ok(TestFunction::Analytic { f, grid }),
            _ => Err(Error::invalid("test function must have compact support")),
        }
    }

    pub fn grid(&self) -> Grid1 {
        match self {
            TestFunction::Analytic { grid, .. } => *grid,
            TestFunction::Grid(g) => g.grid(),
        }
    }

    pub fn sampled(&self) -> Result<GridFn1D> {
        match self {
            TestFunction::Analytic { f, grid } => GridFn1D::sample(f, *grid),
            TestFunction::Grid(g) => Ok(g.clone()),
        }
    }

    pub fn derivative(&self, order: usize) -> Result<GridFn1D> {
        match self {
            TestFunction::Analytic { f, grid } => GridFn1D::sample_derivative(f, order, *grid),
            TestFunction::Grid(g) => g.derivative(order),
        }
    }

    pub fn value_at_zero(&self) -> Result<f64> {
        match self {
            TestFunction::Analytic { f, .. } => Ok(f.eval(0.0)),
            TestFunction::Grid(g) => {
                if !g.grid().extent().contains(0.0) {
                    return Err(Error::invalid("test function grid does not contain 0"));
                }
                Ok(g.eval(0.0))
            }
        }
    }

    /// Same function on a different grid.
    pub fn regrid(&self, grid: Grid1) -> Result<Self> {
        match self {
            TestFunction::Analytic { f, .. } => Ok(TestFunction::Analytic { f: f.clone(), grid }),
            TestFunction::Grid(_) => Err(Error::invalid("grid test functions cannot be resampled")),
        }
    }
}

/// Half-width of the grid the standard test functions live on.
pub const TEST_GRID_RADIUS: f64 = 2.5;

/// Five fixed test functions with 0 inside their supports.
pub fn standard_test_functions(dx: f64) -> Result<Vec<TestFunction>> {
    let grid = Grid1::symmetric(TEST_GRID_RADIUS, dx)?;
    let b = AnalyticFn1D::bump;
    let g = AnalyticFn1D::gaussian;
    let fs = vec![
        b(),
        b().compose_affine(0.5, 0.0)?,
        g().compose_affine(1.0 / 0.7, 0.0)?.mul(&b().compose_affine(1.0 / 1.5, 0.0)?),
        b().compose_affine(1.0 / 1.2, -0.2 / 1.2)?,
        g().compose_affine(1.0 / 0.8, 0.3 / 0.8)?.mul(&b().compose_affine(1.0 / 1.8, 0.1 / 1.8)?),
    ];
    fs.into_iter().map(|f| TestFunction::analytic(f, grid)).collect()
}

/// Extra test functions: bumps with random centers and widths, seeded.
pub fn random_test_functions(count: usize, seed: u64, dx: f64) -> Result<Vec<TestFunction>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let grid = Grid1::symmetric(TEST_GRID_RADIUS, dx)?;
    (0..count)
        .map(|_| {
            let c: f64 = rng.gen_range(-0.4..0.4);
            let w: f64 = rng.gen_range(0.8..1.8);
            let f = AnalyticFn1D::bump().compose_affine(1.0 / w, -c / w)?;
            TestFunction::analytic(f, grid)
        })
        .collect()
}

/// Checks that the standard grid covers every test function support.
pub fn covers(tests: &[TestFunction]) -> bool {
    tests.iter().all(|t| match t {
        TestFunction::Analytic { f, grid } => f
            .support()
            .map(|s| grid.extent().contains_interval(&s))
            .unwrap_or(true),
        TestFunction::Grid(_) => true,
    })
}
