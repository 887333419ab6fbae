use super::{DeltaSplitting, TestFunction};
use crate::error::{Error, Result};
use crate::gridfn::{AnalyticFn1D, GridFn1D, Interval};
use serde::Serialize;

/// Largest supported number of exponential terms.
pub const MAX_TERMS: usize = 8;

/// Above this the partial-fraction weights are considered ill-conditioned.
const WEIGHT_LIMIT: f64 = 1e12;

/// Exponential-sum fundamental solution of `P(d/dt) = prod_j (1 - d^2/dt^2 / lambda_j^2)`
/// together with its compactly supported cutoff form.
///
/// `phi = sum_j c_j (lambda_j / 2) exp(-lambda_j |t|)` solves `P(d/dt) phi = delta`.
/// With `theta` a plateau equal to 1 on `[-eps/2, eps/2]` and vanishing
/// outside `(-0.95 eps, 0.95 eps)`:
/// `P(d/dt)(theta phi) = delta - g_corr`, with `g_corr` smooth and supported
/// in the annulus `eps/2 <= |t| < eps`.
#[derive(Clone, Debug)]
pub struct DmGenerators {
    pub eps: f64,
    pub lambda: Vec<f64>,
    /// `b[k]` multiplies `(-1)^k d^(2k)/dt^(2k)` in `P`; `b[0] = 1`.
    pub b: Vec<f64>,
    /// Partial-fraction weights, summing to 1.
    pub c: Vec<f64>,
    pub phi: AnalyticFn1D,
    pub theta: AnalyticFn1D,
    pub f_cut: AnalyticFn1D,
    pub g_corr: AnalyticFn1D,
}

#[derive(Clone, Debug, Serialize)]
pub struct DmGeneratorsInfo {
    #[serde(rename = "J")]
    pub j: usize,
    pub eps: f64,
    pub lambda: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub f_cut_support: Option<Interval>,
    pub g_corr_support: Option<Interval>,
}

/// Rates `lambda_j = (10 / eps) growth^(j-1)` for `j = 1..=J`.
pub fn build_dm_generators(j: usize, growth: f64, eps: f64) -> Result<DmGenerators> {
    if j == 0 || j > MAX_TERMS {
        return Err(Error::invalid(format!("J must be in 1..={MAX_TERMS}, got {j}")));
    }
    if !(growth > 1.0 && growth.is_finite()) {
        return Err(Error::invalid(format!("growth factor must exceed 1, got {growth}")));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid(format!("eps must be positive, got {eps}")));
    }
    let lambda: Vec<f64> = (0..j).map(|i| 10.0 / eps * growth.powi(i as i32)).collect();
    from_rates(lambda, eps)
}

/// Generators for explicit, strictly increasing positive rates.
pub fn from_rates(lambda: Vec<f64>, eps: f64) -> Result<DmGenerators> {
    let j = lambda.len();
    if j == 0 || j > MAX_TERMS {
        return Err(Error::invalid(format!("need 1..={MAX_TERMS} rates, got {j}")));
    }
    if lambda[0] <= 0.0 || lambda.windows(2).any(|w| !(w[1] > w[0])) || lambda.iter().any(|l| !l.is_finite()) {
        return Err(Error::invalid("rates must be positive, finite and strictly increasing"));
    }
    let b = elementary_symmetric(&lambda.iter().map(|l| 1.0 / (l * l)).collect::<Vec<_>>());
    let c: Vec<f64> = (0..j)
        .map(|a| {
            let mut w = 1.0;
            for i in 0..j {
                if i != a {
                    w /= 1.0 - (lambda[a] / lambda[i]).powi(2);
                }
            }
            w
        })
        .collect();
    if b.iter().chain(&c).any(|v| !v.is_finite() || v.abs() > WEIGHT_LIMIT) {
        return Err(Error::CoefficientOverflow { j });
    }
    let phi = AnalyticFn1D::sum(
        lambda
            .iter()
            .zip(&c)
            .map(|(l, cj)| Ok(AnalyticFn1D::exp_abs(*l)?.scale(cj * l / 2.0)))
            .collect::<Result<Vec<_>>>()?,
    );
    let theta = AnalyticFn1D::plateau(Interval::symmetric(eps / 2.0), Interval::symmetric(0.95 * eps))?;
    let f_cut = theta.mul(&phi);
    let mut coeffs = vec![0.0; 2 * j + 1];
    for (k, bk) in b.iter().enumerate() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        coeffs[2 * k] = -bk * sign;
    }
    // P(theta phi) = P(phi) = delta inside the plateau, so the correction lives on the annulus
    let g_corr = f_cut.diff_comb(coeffs).excise(-eps / 2.0, eps / 2.0);
    Ok(DmGenerators { eps, lambda, b, c, phi, theta, f_cut, g_corr })
}

/// Coefficients of `prod_j (1 + x_j z)`, lowest degree first.
fn elementary_symmetric(x: &[f64]) -> Vec<f64> {
    let mut e = vec![1.0];
    for xi in x {
        let mut next = vec![0.0; e.len() + 1];
        for (k, ek) in e.iter().enumerate() {
            next[k] += ek;
            next[k + 1] += ek * xi;
        }
        e = next;
    }
    e
}

impl DmGenerators {
    pub fn order(&self) -> usize {
        self.lambda.len()
    }

    pub fn info(&self) -> DmGeneratorsInfo {
        DmGeneratorsInfo {
            j: self.order(),
            eps: self.eps,
            lambda: self.lambda.clone(),
            b: self.b.clone(),
            c: self.c.clone(),
            f_cut_support: self.f_cut.support(),
            g_corr_support: self.g_corr.support(),
        }
    }

    /// View pairing the uncut `phi` against `P(d/dt)^T w`.
    pub fn uncut(&self) -> UncutKernel<'_> {
        UncutKernel(self)
    }

    fn operator_pairing(&self, f: &AnalyticFn1D, w: &TestFunction) -> Result<f64> {
        let grid = w.grid();
        let fs = GridFn1D::sample(f, grid)?;
        let mut acc = 0.0;
        for (k, bk) in self.b.iter().enumerate() {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * bk * fs.mul(&w.derivative(2 * k)?)?.integrate();
        }
        Ok(acc)
    }
}

impl DeltaSplitting for DmGenerators {
    /// `<g_corr, w> + <theta phi, P(d/dt) w>`.
    fn pair_with(&self, w: &TestFunction) -> Result<f64> {
        let g = GridFn1D::sample(&self.g_corr, w.grid())?;
        Ok(g.mul(&w.sampled()?)?.integrate() + self.operator_pairing(&self.f_cut, w)?)
    }
}

pub struct UncutKernel<'a>(&'a DmGenerators);

impl DeltaSplitting for UncutKernel<'_> {
    fn pair_with(&self, w: &TestFunction) -> Result<f64> {
        self.0.operator_pairing(&self.0.phi, w)
    }
}
