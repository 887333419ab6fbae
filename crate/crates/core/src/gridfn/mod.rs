//! Grid-sampled functions, closed-form functions with exact derivatives,
//! quadrature and interpolation.

pub mod analytic;
pub mod grid1d;
pub mod grid2d;
pub mod interp;
pub mod interval;
pub mod io;
pub mod quadrature;

pub use analytic::{field_power, AnalyticFn1D, Smoothness};
pub use grid1d::{Grid1, GridFn1D};
pub use grid2d::GridFn2D;
pub use interval::{Box2, Interval, Support};

use crate::error::{Error, Result};

/// A function on a groupoid or a manifold: one or two coordinates.
#[derive(Clone, Debug, PartialEq)]
pub enum GridFn {
    D1(GridFn1D),
    D2(GridFn2D),
}

impl GridFn {
    pub fn sup_norm(&self) -> f64 {
        match self {
            GridFn::D1(f) => f.sup_norm(),
            GridFn::D2(f) => f.sup_norm(),
        }
    }

    pub fn l2_norm(&self) -> f64 {
        match self {
            GridFn::D1(f) => f.l2_norm(),
            GridFn::D2(f) => f.l2_norm(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            GridFn::D1(f) => f.is_zero(),
            GridFn::D2(f) => f.is_zero(),
        }
    }

    pub fn sub(&self, other: &GridFn) -> Result<GridFn> {
        match (self, other) {
            (GridFn::D1(a), GridFn::D1(b)) => Ok(GridFn::D1(a.sub(b)?)),
            (GridFn::D2(a), GridFn::D2(b)) => Ok(GridFn::D2(a.sub(b)?)),
            _ => Err(Error::invalid("dimension mismatch")),
        }
    }

    pub fn add(&self, other: &GridFn) -> Result<GridFn> {
        match (self, other) {
            (GridFn::D1(a), GridFn::D1(b)) => Ok(GridFn::D1(a.add(b)?)),
            (GridFn::D2(a), GridFn::D2(b)) => Ok(GridFn::D2(a.add(b)?)),
            _ => Err(Error::invalid("dimension mismatch")),
        }
    }

    pub fn scale(&self, c: f64) -> GridFn {
        match self {
            GridFn::D1(f) => GridFn::D1(f.scale(c)),
            GridFn::D2(f) => GridFn::D2(f.scale(c)),
        }
    }

    /// Zero function on the same grid.
    pub fn zeros_like(&self) -> GridFn {
        match self {
            GridFn::D1(f) => GridFn::D1(GridFn1D::zeros(f.grid())),
            GridFn::D2(f) => {
                let (a, b) = f.grids();
                GridFn::D2(GridFn2D::zeros(a, b))
            }
        }
    }

    pub fn as_1d(&self) -> Option<&GridFn1D> {
        match self {
            GridFn::D1(f) => Some(f),
            GridFn::D2(_) => None,
        }
    }

    pub fn as_2d(&self) -> Option<&GridFn2D> {
        match self {
            GridFn::D2(f) => Some(f),
            GridFn::D1(_) => None,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            GridFn::D1(_) => 1,
            GridFn::D2(_) => 2,
        }
    }
}

impl From<GridFn1D> for GridFn {
    fn from(f: GridFn1D) -> Self {
        GridFn::D1(f)
    }
}

impl From<GridFn2D> for GridFn {
    fn from(f: GridFn2D) -> Self {
        GridFn::D2(f)
    }
}
