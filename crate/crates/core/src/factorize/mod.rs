//! Constructive factorization `phi = sum_i f_i * psi_i`: first along a flow of
//! the line, then transferred to groupoid functions through a chart.

pub mod assemble;
pub mod chart;
pub mod linefac;
pub mod phi;

pub use assemble::{assemble_horrid, groupoid_factorize, partition_of_unity, target_hull, verify_factorization, GroupoidFacConfig};
pub use chart::{build_chart_transfer, pi_tilde, ChartFn, ChartTransfer, ChartWindow};
pub use linefac::{frame_factorize, linefac, FactorMode, LineFacConfig};
pub use phi::{field_apply, Layout, PhiSource};

use crate::gridfn::{AnalyticFn1D, GridFn, Interval};
use serde::Serialize;

/// One term `pi(f) psi` of a factorization.
#[derive(Clone, Debug)]
pub struct FactorPair {
    /// Closed-form one-dimensional kernel the factor was built from.
    pub kernel: AnalyticFn1D,
    pub f: GridFn,
    pub psi: GridFn,
}

/// Support certificates of one pair, decided at grid level without tolerance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairCertificate {
    pub index: usize,
    /// Every nonzero sample of `psi` sits at a node inside `supp(phi)`.
    pub psi_in_phi: bool,
    /// Every nonzero sample of `f` sits at a node inside the window.
    pub f_in_window: bool,
    pub psi_support: Option<Interval>,
    pub f_support: Option<Interval>,
}

#[derive(Clone, Debug)]
pub struct FactorizationResult {
    pub mode: FactorMode,
    pub eps: f64,
    pub pairs: Vec<FactorPair>,
    pub phi: GridFn,
    pub residual: GridFn,
    pub residual_sup: f64,
    pub residual_l2: f64,
    pub certificates: Vec<PairCertificate>,
    /// Base window `U` of the chart, for groupoid factorizations.
    pub base_window: Option<Interval>,
}

impl FactorizationResult {
    pub fn certificates_hold(&self) -> bool {
        self.certificates.iter().all(|c| c.psi_in_phi && c.f_in_window)
    }

    pub fn manifest(&self, ceiling: f64) -> FactorManifest {
        FactorManifest {
            mode: self.mode,
            eps: self.eps,
            n_pairs: self.pairs.len(),
            residual_sup: self.residual_sup,
            residual_l2: self.residual_l2,
            residual_ceiling: ceiling,
            certificates: self.certificates.clone(),
            base_window: self.base_window,
            kernels: self.pairs.iter().map(|p| p.kernel.describe()).collect(),
            pass: self.certificates_hold() && self.residual_sup <= ceiling,
        }
    }
}

/// JSON summary written next to the factor grids.
#[derive(Clone, Debug, Serialize)]
pub struct FactorManifest {
    pub mode: FactorMode,
    pub eps: f64,
    pub n_pairs: usize,
    pub residual_sup: f64,
    pub residual_l2: f64,
    pub residual_ceiling: f64,
    pub certificates: Vec<PairCertificate>,
    pub base_window: Option<Interval>,
    pub kernels: Vec<String>,
    pub pass: bool,
}
