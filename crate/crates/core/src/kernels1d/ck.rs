use super::{DeltaSplitting, TestFunction};
use crate::error::{Error, Result};
use crate::gridfn::analytic::factorial;
use crate::gridfn::{AnalyticFn1D, GridFn1D, Interval};
use serde::Serialize;

/// Splitting `delta = f^(k+2) + g` with `f` in `C^k` and `g` smooth, both
/// supported in `[0, b]`.
///
/// Built from the fundamental solution `F = t_+^(k+1) / (k+1)!` and a smooth
/// step `s` rising on `[a, b]`: `f = F (1 - s)`, `g = (F s)^(k+2)`.
#[derive(Clone, Debug)]
pub struct CkPair {
    pub k: u32,
    pub cut: Interval,
    pub f: AnalyticFn1D,
    pub g: AnalyticFn1D,
}

#[derive(Serialize)]
pub struct CkPairInfo {
    pub k: u32,
    pub cut: Interval,
    pub f_support: Option<Interval>,
    pub g_support: Option<Interval>,
}

/// Builds the pair for `0 < a < b`.
pub fn build_ck_pair(k: u32, cut: Interval) -> Result<CkPair> {
    if !(cut.lo > 0.0 && cut.lo < cut.hi && cut.hi.is_finite()) {
        return Err(Error::invalid(format!("cut interval must satisfy 0 < a < b, got {cut}")));
    }
    let fundamental = AnalyticFn1D::pos_pow(k + 1)?.scale(1.0 / factorial(k as usize + 1));
    let w = cut.width();
    let rise = AnalyticFn1D::smooth_step().compose_affine(1.0 / w, 1.0 - cut.lo / w)?;
    let fall = AnalyticFn1D::smooth_step().compose_affine(-1.0 / w, 2.0 + cut.lo / w)?;
    let f = fundamental.mul(&fall);
    // F s equals F beyond b, whose (k+2)-th derivative vanishes there
    let g = fundamental.mul(&rise).derivative(k as usize + 2).clip(cut);
    Ok(CkPair { k, cut, f, g })
}

impl CkPair {
    pub fn info(&self) -> CkPairInfo {
        CkPairInfo { k: self.k, cut: self.cut, f_support: self.f.support(), g_support: self.g.support() }
    }

    pub fn sample_f(&self, grid: crate::gridfn::Grid1) -> Result<GridFn1D> {
        GridFn1D::sample(&self.f, grid)
    }

    pub fn sample_g(&self, grid: crate::gridfn::Grid1) -> Result<GridFn1D> {
        GridFn1D::sample(&self.g, grid)
    }
}

impl DeltaSplitting for CkPair {
    fn pair_with(&self, w: &TestFunction) -> Result<f64> {
        let grid = w.grid();
        let order = self.k as usize + 2;
        let f = GridFn1D::sample(&self.f, grid)?;
        let g = GridFn1D::sample(&self.g, grid)?;
        let wd = w.derivative(order)?;
        let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
        Ok(sign * f.mul(&wd)?.integrate() + g.mul(&w.sampled()?)?.integrate())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridfn::Smoothness;

    #[test]
    fn supports_are_certified_inside_cut() {
        let p = build_ck_pair(2, Interval::new(0.3, 0.6)).unwrap();
        assert_eq!(p.f.support(), Some(Interval::new(0.0, 0.6)));
        assert_eq!(p.g.support(), Some(Interval::new(0.3, 0.6)));
        assert_eq!(p.f.smoothness(), Smoothness::Finite(2));
        assert!(build_ck_pair(1, Interval::new(0.0, 1.0)).is_err());
    }

    #[test]
    fn f_equals_fundamental_solution_before_cut() {
        let p = build_ck_pair(1, Interval::new(0.5, 1.0)).unwrap();
        assert!((p.f.eval(0.3) - 0.09 / 2.0).abs() < 1e-15);
        assert_eq!(p.f.eval(1.2), 0.0);
        assert_eq!(p.g.eval(0.2), 0.0);
    }
}
