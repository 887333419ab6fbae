//! Numerical deconvolution on Lie groupoids: weak splittings of the Dirac
//! delta on the line, groupoid convolution, factorization of compactly
//! supported functions into finite sums of convolution products, and the
//! vanishing-ideal experiments that go with them.

pub mod cli;
pub mod error;
pub mod factorize;
pub mod gridfn;
pub mod groupoid;
pub mod ideals;
pub mod kernels1d;

pub use error::{Error, Result};
