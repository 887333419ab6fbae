//! Closed-form scalar functions with exact derivatives of every order.
//!
//! Derivatives are computed by propagating normalized Taylor coefficients
//! (`c_n = f^(n)(t) / n!`) through the expression tree. At the kinks of
//! `exp_abs` and `pos_pow` the jet is the right-sided one.

use super::interval::{hull_opt, intersect_opt, Interval, Support};
use super::quadrature::gauss_composite;
use crate::error::{Error, Result};
use std::fmt;
use std::sync::{Arc, OnceLock};

/// Arguments of `exp` below this underflow to zero.
const EXP_UNDERFLOW: f64 = -745.0;

#[derive(Clone)]
pub struct AnalyticFn1D {
    node: Arc<Node>,
}

#[derive(Debug)]
enum Node {
    Const(f64),
    Monomial(u32),
    PosPow(u32),
    Bump,
    SmoothStep,
    ExpAbs(f64),
    Gaussian,
    Tanh,
    FlatExp,
    Sum(Vec<AnalyticFn1D>),
    Product(Vec<AnalyticFn1D>),
    Affine { inner: AnalyticFn1D, scale: f64, shift: f64 },
    Scaled { inner: AnalyticFn1D, factor: f64 },
    DiffComb { inner: AnalyticFn1D, coeffs: Vec<f64> },
    Clip { inner: AnalyticFn1D, keep: Interval },
    Excise { inner: AnalyticFn1D, lo: f64, hi: f64 },
}

/// Differentiability class of a closed-form function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Smoothness {
    /// `C^k`; `Finite(0)` includes merely continuous functions.
    Finite(u32),
    Infinite,
}

impl Smoothness {
    fn min(self, other: Smoothness) -> Smoothness {
        std::cmp::min(self, other)
    }

    fn lower(self, by: u32) -> Smoothness {
        match self {
            Smoothness::Finite(k) => Smoothness::Finite(k.saturating_sub(by)),
            Smoothness::Infinite => Smoothness::Infinite,
        }
    }
}

impl fmt::Debug for AnalyticFn1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.describe())
    }
}

impl AnalyticFn1D {
    fn wrap(node: Node) -> Self {
        AnalyticFn1D { node: Arc::new(node) }
    }

    pub fn constant(c: f64) -> Self {
        Self::wrap(Node::Const(c))
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// `t^n`.
    pub fn monomial(n: u32) -> Self {
        Self::wrap(Node::Monomial(n))
    }

    /// `t^n` for `t >= 0`, zero otherwise. Requires `n >= 1`.
    pub fn pos_pow(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("pos_pow needs n >= 1"));
        }
        Ok(Self::wrap(Node::PosPow(n)))
    }

    /// `exp(1 - 1/(1 - t^2))` on `(-1, 1)`, zero elsewhere; equals 1 at 0.
    pub fn bump() -> Self {
        Self::wrap(Node::Bump)
    }

    /// `bump((t - center) / radius)`, supported on `[center - radius, center + radius]`.
    pub fn bump_on(center: f64, radius: f64) -> Result<Self> {
        Self::bump().compose_affine(1.0 / radius, -center / radius)
    }

    /// Smooth step: 0 for `t <= 1`, 1 for `t >= 2`, with `s(t) + s(3 - t) = 1`.
    pub fn smooth_step() -> Self {
        Self::wrap(Node::SmoothStep)
    }

    /// `exp(-lambda |t|)`.
    pub fn exp_abs(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("exp_abs rate must be positive, got {lambda}")));
        }
        Ok(Self::wrap(Node::ExpAbs(lambda)))
    }

    /// `exp(-t^2)`.
    pub fn gaussian() -> Self {
        Self::wrap(Node::Gaussian)
    }

    pub fn tanh() -> Self {
        Self::wrap(Node::Tanh)
    }

    /// `exp(-1/t^2)`, zero at 0.
    pub fn flat_exp() -> Self {
        Self::wrap(Node::FlatExp)
    }

    pub fn sum(terms: Vec<AnalyticFn1D>) -> Self {
        Self::wrap(Node::Sum(terms))
    }

    pub fn product(factors: Vec<AnalyticFn1D>) -> Self {
        Self::wrap(Node::Product(factors))
    }

    /// `t -> self(scale * t + shift)`.
    pub fn compose_affine(&self, scale: f64, shift: f64) -> Result<Self> {
        if scale == 0.0 || !scale.is_finite() || !shift.is_finite() {
            return Err(Error::invalid("affine scale must be finite and nonzero"));
        }
        Ok(Self::wrap(Node::Affine { inner: self.clone(), scale, shift }))
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::wrap(Node::Scaled { inner: self.clone(), factor })
    }

    pub fn add(&self, other: &AnalyticFn1D) -> Self {
        Self::sum(vec![self.clone(), other.clone()])
    }

    pub fn mul(&self, other: &AnalyticFn1D) -> Self {
        Self::product(vec![self.clone(), other.clone()])
    }

    pub fn pow(&self, n: u32) -> Self {
        Self::product(vec![self.clone(); n as usize])
    }

    /// `sum_m coeffs[m] * self^(m)`.
    pub fn diff_comb(&self, coeffs: Vec<f64>) -> Self {
        Self::wrap(Node::DiffComb { inner: self.clone(), coeffs })
    }

    /// The `n`-th derivative.
    pub fn derivative(&self, n: usize) -> Self {
        let mut coeffs = vec![0.0; n + 1];
        coeffs[n] = 1.0;
        self.diff_comb(coeffs)
    }

    /// Restriction to `keep`, zero outside. Meant for functions that already
    /// vanish outside `keep`, so the declared support can be tightened.
    pub fn clip(&self, keep: Interval) -> Self {
        Self::wrap(Node::Clip { inner: self.clone(), keep })
    }

    /// Zero on the open interval `(lo, hi)`.
    pub fn excise(&self, lo: f64, hi: f64) -> Self {
        Self::wrap(Node::Excise { inner: self.clone(), lo, hi })
    }

    /// Equals 1 on `[inner.lo, inner.hi]`, 0 outside `(outer.lo, outer.hi)`,
    /// smooth in between. Infinite ends are allowed on matching sides.
    pub fn plateau(inner: Interval, outer: Interval) -> Result<Self> {
        if !(outer.lo < inner.lo || (outer.lo == inner.lo && inner.lo == f64::NEG_INFINITY))
            || !(inner.hi < outer.hi || (inner.hi == outer.hi && inner.hi == f64::INFINITY))
        {
            return Err(Error::invalid(format!("plateau needs {inner} strictly inside {outer}")));
        }
        let mut factors = Vec::new();
        if inner.lo.is_finite() {
            // s(1 + (t - outer.lo) / w) rises from 0 at outer.lo to 1 at inner.lo
            let w = inner.lo - outer.lo;
            factors.push(Self::smooth_step().compose_affine(1.0 / w, 1.0 - outer.lo / w)?);
        }
        if inner.hi.is_finite() {
            // s(2 - (t - inner.hi) / w) falls from 1 at inner.hi to 0 at outer.hi
            let w = outer.hi - inner.hi;
            factors.push(Self::smooth_step().compose_affine(-1.0 / w, 2.0 + inner.hi / w)?);
        }
        Ok(match factors.len() {
            0 => Self::constant(1.0),
            1 => factors.pop().unwrap(),
            _ => Self::product(factors),
        })
    }

    /// The value, when this is a constant node.
    pub fn as_constant(&self) -> Option<f64> {
        match &*self.node {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// Short name of the root node.
    pub fn node_name(&self) -> &'static str {
        match &*self.node {
            Node::Const(_) => "const",
            Node::Monomial(_) => "monomial",
            Node::PosPow(_) => "pos_pow",
            Node::Bump => "bump",
            Node::SmoothStep => "smooth_step",
            Node::ExpAbs(_) => "exp_abs",
            Node::Gaussian => "gaussian",
            Node::Tanh => "tanh",
            Node::FlatExp => "flat_exp",
            Node::Sum(_) => "sum",
            Node::Product(_) => "product",
            Node::Affine { .. } => "affine",
            Node::Scaled { .. } => "scaled",
            Node::DiffComb { .. } => "diff_comb",
            Node::Clip { .. } => "clip",
            Node::Excise { .. } => "excise",
        }
    }

    pub fn describe(&self) -> String {
        match &*self.node {
            Node::Const(c) => format!("{c}"),
            Node::Monomial(n) => format!("t^{n}"),
            Node::PosPow(n) => format!("t_+^{n}"),
            Node::Bump => "bump(t)".into(),
            Node::SmoothStep => "step(t)".into(),
            Node::ExpAbs(l) => format!("exp(-{l}|t|)"),
            Node::Gaussian => "exp(-t^2)".into(),
            Node::Tanh => "tanh(t)".into(),
            Node::FlatExp => "exp(-1/t^2)".into(),
            Node::Sum(v) => format!("({})", v.iter().map(|f| f.describe()).collect::<Vec<_>>().join(" + ")),
            Node::Product(v) => v.iter().map(|f| f.describe()).collect::<Vec<_>>().join(" * "),
            Node::Affine { inner, scale, shift } => format!("[{}]@({scale}t{shift:+})", inner.describe()),
            Node::Scaled { inner, factor } => format!("{factor}*{}", inner.describe()),
            Node::DiffComb { inner, coeffs } => format!("D{coeffs:?}[{}]", inner.describe()),
            Node::Clip { inner, keep } => format!("{}|{keep}", inner.describe()),
            Node::Excise { inner, lo, hi } => format!("{}\\({lo},{hi})", inner.describe()),
        }
    }

    /// Certified support (a superset of the true support).
    pub fn support(&self) -> Support {
        match &*self.node {
            Node::Const(c) => (*c != 0.0).then_some(Interval::REAL_LINE),
            Node::Monomial(_) | Node::ExpAbs(_) | Node::Gaussian | Node::Tanh | Node::FlatExp => {
                Some(Interval::REAL_LINE)
            }
            Node::PosPow(_) => Some(Interval::new(0.0, f64::INFINITY)),
            Node::Bump => Some(Interval::new(-1.0, 1.0)),
            Node::SmoothStep => Some(Interval::new(1.0, f64::INFINITY)),
            Node::Sum(v) => v.iter().fold(None, |acc, f| hull_opt(acc, f.support())),
            Node::Product(v) => {
                if v.is_empty() {
                    return Some(Interval::REAL_LINE);
                }
                v.iter().skip(1).fold(v[0].support(), |acc, f| intersect_opt(acc, f.support()))
            }
            Node::Affine { inner, scale, shift } => inner.support().map(|s| s.affine_preimage(*scale, *shift)),
            Node::Scaled { inner, factor } => {
                if *factor == 0.0 {
                    None
                } else {
                    inner.support()
                }
            }
            Node::DiffComb { inner, coeffs } => {
                if coeffs.iter().all(|c| *c == 0.0) {
                    None
                } else {
                    inner.support()
                }
            }
            Node::Clip { inner, keep } => inner.support().and_then(|s| s.intersect(keep)),
            Node::Excise { inner, .. } => inner.support(),
        }
    }

    pub fn smoothness(&self) -> Smoothness {
        match &*self.node {
            Node::PosPow(n) => Smoothness::Finite(n - 1),
            Node::ExpAbs(_) => Smoothness::Finite(0),
            Node::Sum(v) | Node::Product(v) => {
                v.iter().fold(Smoothness::Infinite, |acc, f| acc.min(f.smoothness()))
            }
            Node::Affine { inner, .. } | Node::Scaled { inner, .. } => inner.smoothness(),
            Node::DiffComb { inner, coeffs } => {
                let top = coeffs.iter().rposition(|c| *c != 0.0).unwrap_or(0) as u32;
                inner.smoothness().lower(top)
            }
            // restriction may cut a nonzero function; callers use these only where it does not
            Node::Clip { inner, .. } | Node::Excise { inner, .. } => inner.smoothness(),
            _ => Smoothness::Infinite,
        }
    }

    /// Function value. Panics never; may return a non-finite value, see [`Self::try_eval`].
    pub fn eval(&self, t: f64) -> f64 {
        match &*self.node {
            Node::Const(c) => *c,
            Node::Monomial(n) => t.powi(*n as i32),
            Node::PosPow(n) => {
                if t >= 0.0 {
                    t.powi(*n as i32)
                } else {
                    0.0
                }
            }
            Node::Bump => bump_value(t),
            Node::SmoothStep => smooth_step_value(t),
            Node::ExpAbs(l) => (-l * t.abs()).exp(),
            Node::Gaussian => (-t * t).exp(),
            Node::Tanh => t.tanh(),
            Node::FlatExp => {
                if t == 0.0 {
                    0.0
                } else {
                    (-1.0 / (t * t)).exp()
                }
            }
            Node::Sum(v) => v.iter().map(|f| f.eval(t)).sum(),
            Node::Product(v) => {
                let mut acc = 1.0;
                for f in v {
                    acc *= f.eval(t);
                    if acc == 0.0 {
                        return 0.0;
                    }
                }
                acc
            }
            Node::Affine { inner, scale, shift } => inner.eval(scale * t + shift),
            Node::Scaled { inner, factor } => factor * inner.eval(t),
            Node::DiffComb { .. } => self.jet(t, 0)[0],
            Node::Clip { inner, keep } => {
                if keep.contains(t) {
                    inner.eval(t)
                } else {
                    0.0
                }
            }
            Node::Excise { inner, lo, hi } => {
                if *lo < t && t < *hi {
                    0.0
                } else {
                    inner.eval(t)
                }
            }
        }
    }

    /// Value with a diagnostic naming the offending node when it is not finite.
    pub fn try_eval(&self, t: f64) -> Result<f64> {
        let v = self.eval(t);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite { node: self.first_non_finite_node(t), x: t, value: v })
        }
    }

    fn first_non_finite_node(&self, t: f64) -> String {
        let children: Vec<(&AnalyticFn1D, f64)> = match &*self.node {
            Node::Sum(v) | Node::Product(v) => v.iter().map(|f| (f, t)).collect(),
            Node::Affine { inner, scale, shift } => vec![(inner, scale * t + shift)],
            Node::Scaled { inner, .. }
            | Node::DiffComb { inner, .. }
            | Node::Clip { inner, .. }
            | Node::Excise { inner, .. } => vec![(inner, t)],
            _ => vec![],
        };
        for (c, tc) in children {
            if !c.eval(tc).is_finite() {
                return c.first_non_finite_node(tc);
            }
        }
        self.describe()
    }

    /// `n`-th derivative at `t`.
    pub fn eval_derivative(&self, t: f64, n: usize) -> f64 {
        if n == 0 {
            return self.eval(t);
        }
        self.jet(t, n)[n] * factorial(n)
    }

    /// Normalized Taylor coefficients `f^(j)(t) / j!` for `j = 0..=order`.
    pub fn jet(&self, t: f64, order: usize) -> Vec<f64> {
        let len = order + 1;
        match &*self.node {
            Node::Const(c) => {
                let mut v = vec![0.0; len];
                v[0] = *c;
                v
            }
            Node::Monomial(n) => monomial_jet(*n, t, len),
            Node::PosPow(n) => {
                if t >= 0.0 {
                    monomial_jet(*n, t, len)
                } else {
                    vec![0.0; len]
                }
            }
            Node::Bump => bump_jet(t, len),
            Node::SmoothStep => smooth_step_jet(t, len),
            Node::ExpAbs(l) => {
                let sigma = if t < 0.0 { -1.0 } else { 1.0 };
                let mut v = vec![0.0; len];
                v[0] = (-l * t.abs()).exp();
                for j in 1..len {
                    v[j] = v[j - 1] * (-l * sigma) / j as f64;
                }
                v
            }
            Node::Gaussian => {
                let mut g = vec![0.0; len];
                g[0] = -t * t;
                if len > 1 {
                    g[1] = -2.0 * t;
                }
                if len > 2 {
                    g[2] = -1.0;
                }
                exp_jet(&g)
            }
            Node::Tanh => {
                let mut c = vec![0.0; len];
                c[0] = t.tanh();
                // T' = 1 - T^2
                for n in 0..len - 1 {
                    let mut sq = 0.0;
                    for j in 0..=n {
                        sq += c[j] * c[n - j];
                    }
                    let rhs = if n == 0 { 1.0 - sq } else { -sq };
                    c[n + 1] = rhs / (n + 1) as f64;
                }
                c
            }
            Node::FlatExp => {
                if t == 0.0 || -1.0 / (t * t) < EXP_UNDERFLOW {
                    return vec![0.0; len];
                }
                let mut g = vec![0.0; len];
                let mut tp = 1.0 / (t * t);
                for (j, gj) in g.iter_mut().enumerate() {
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    *gj = -(j as f64 + 1.0) * sign * tp;
                    tp /= t;
                }
                exp_jet(&g)
            }
            Node::Sum(v) => {
                let mut acc = vec![0.0; len];
                for f in v {
                    for (a, b) in acc.iter_mut().zip(f.jet(t, order)) {
                        *a += b;
                    }
                }
                acc
            }
            Node::Product(v) => {
                let mut acc = vec![0.0; len];
                acc[0] = 1.0;
                for f in v {
                    let j = f.jet(t, order);
                    if j.iter().all(|x| *x == 0.0) {
                        return vec![0.0; len];
                    }
                    acc = cauchy(&acc, &j);
                }
                acc
            }
            Node::Affine { inner, scale, shift } => {
                let mut v = inner.jet(scale * t + shift, order);
                let mut p = 1.0;
                for c in v.iter_mut() {
                    *c *= p;
                    p *= scale;
                }
                v
            }
            Node::Scaled { inner, factor } => inner.jet(t, order).into_iter().map(|c| c * factor).collect(),
            Node::DiffComb { inner, coeffs } => {
                let deg = coeffs.len().saturating_sub(1);
                let base = inner.jet(t, order + deg);
                let mut out = vec![0.0; len];
                for (n, o) in out.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (m, cm) in coeffs.iter().enumerate() {
                        if *cm == 0.0 {
                            continue;
                        }
                        // d^n/dt^n of f^(m), normalized by n!
                        acc += cm * falling_ratio(m + n, n) * base[m + n];
                    }
                    *o = acc;
                }
                out
            }
            Node::Clip { inner, keep } => {
                if keep.contains(t) {
                    inner.jet(t, order)
                } else {
                    vec![0.0; len]
                }
            }
            Node::Excise { inner, lo, hi } => {
                if *lo < t && t < *hi {
                    vec![0.0; len]
                } else {
                    inner.jet(t, order)
                }
            }
        }
    }

    /// Upper bound of `|f|` on a bounded interval, by dense sampling plus a
    /// derivative-based margin. Used as a completeness guard for vector fields.
    pub fn bound_on(&self, iv: Interval) -> Option<f64> {
        if !iv.is_bounded() {
            return match &*self.node {
                Node::Tanh | Node::Bump | Node::Gaussian | Node::FlatExp | Node::SmoothStep | Node::ExpAbs(_) => {
                    Some(1.0)
                }
                Node::Const(c) => Some(c.abs()),
                Node::Product(v) => v.iter().try_fold(1.0, |acc, f| Some(acc * f.bound_on(iv)?)),
                Node::Sum(v) => v.iter().try_fold(0.0, |acc, f| Some(acc + f.bound_on(iv)?)),
                Node::Scaled { inner, factor } => Some(factor.abs() * inner.bound_on(iv)?),
                Node::Affine { inner, .. } => inner.bound_on(iv),
                _ => None,
            };
        }
        let n = 4096;
        let h = iv.width() / n as f64;
        let mut m: f64 = 0.0;
        let mut slope: f64 = 0.0;
        for i in 0..=n {
            let t = iv.lo + i as f64 * h;
            let j = self.jet(t, 1);
            m = m.max(j[0].abs());
            slope = slope.max(j[1].abs());
        }
        let b = m + slope * h;
        b.is_finite().then_some(b)
    }

    /// Samples on `x0 + i dx`, `i < n`, failing on the first non-finite value.
    pub fn sample(&self, x0: f64, dx: f64, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|i| self.try_eval(x0 + i as f64 * dx)).collect()
    }

    /// Samples of the `order`-th derivative.
    pub fn sample_derivative(&self, order: usize, x0: f64, dx: f64, n: usize) -> Result<Vec<f64>> {
        (0..n)
            .map(|i| {
                let t = x0 + i as f64 * dx;
                let v = self.eval_derivative(t, order);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::NonFinite { node: self.first_non_finite_node(t), x: t, value: v })
                }
            })
            .collect()
    }
}

/// `(a X)^n phi` evaluated at `x`, where `X = d/dx` scaled pointwise by `a`.
pub fn field_power(a: &AnalyticFn1D, phi: &AnalyticFn1D, n: usize, x: f64) -> f64 {
    if n == 0 {
        return phi.eval(x);
    }
    let aj = a.jet(x, n);
    let mut p = phi.jet(x, n);
    for _ in 0..n {
        let d: Vec<f64> = (1..p.len()).map(|k| k as f64 * p[k]).collect();
        p = cauchy(&aj[..d.len()], &d);
    }
    p[0]
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// `m! / n!` for `m >= n`.
fn falling_ratio(m: usize, n: usize) -> f64 {
    ((n + 1)..=m).fold(1.0, |acc, k| acc * k as f64)
}

fn cauchy(a: &[f64], b: &[f64]) -> Vec<f64> {
    let len = a.len().min(b.len());
    let mut out = vec![0.0; len];
    for (n, o) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for j in 0..=n {
            s += a[j] * b[n - j];
        }
        *o = s;
    }
    out
}

fn exp_jet(g: &[f64]) -> Vec<f64> {
    let len = g.len();
    let mut h = vec![0.0; len];
    if g[0] < EXP_UNDERFLOW {
        return h;
    }
    h[0] = g[0].exp();
    for n in 1..len {
        let mut s = 0.0;
        for j in 1..=n {
            s += j as f64 * g[j] * h[n - j];
        }
        h[n] = s / n as f64;
    }
    h
}

fn monomial_jet(n: u32, t: f64, len: usize) -> Vec<f64> {
    let n = n as usize;
    let mut v = vec![0.0; len];
    let mut binom = 1.0;
    for (j, vj) in v.iter_mut().enumerate().take(n + 1) {
        *vj = binom * t.powi((n - j) as i32);
        binom = binom * (n - j) as f64 / (j + 1) as f64;
    }
    v
}

fn bump_value(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        return 0.0;
    }
    let e = 1.0 - 1.0 / (1.0 - t * t);
    if e < EXP_UNDERFLOW {
        0.0
    } else {
        e.exp()
    }
}

fn bump_jet(t: f64, len: usize) -> Vec<f64> {
    if t.abs() >= 1.0 {
        return vec![0.0; len];
    }
    let g0 = 1.0 - 1.0 / (1.0 - t * t);
    if g0 < EXP_UNDERFLOW {
        return vec![0.0; len];
    }
    // 1/(1-t^2) = (1/(1-t) + 1/(1+t)) / 2
    let mut g = vec![0.0; len];
    g[0] = g0;
    let (a, b) = (1.0 / (1.0 - t), 1.0 / (1.0 + t));
    let (mut pa, mut pb) = (a, b);
    for (n, gn) in g.iter_mut().enumerate().skip(1) {
        pa *= a;
        pb *= b;
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        *gn = -0.5 * (pa + sign * pb);
    }
    exp_jet(&g)
}

/// `int_{-1}^{v} bump`.
fn bump_cdf(v: f64) -> f64 {
    if v <= -1.0 {
        return 0.0;
    }
    let total = bump_mass();
    if v >= 1.0 {
        return total;
    }
    if v > 0.0 {
        return total - bump_cdf(-v);
    }
    gauss_composite(-1.0, v, 16, bump_value)
}

fn bump_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| 2.0 * gauss_composite(-1.0, 0.0, 32, bump_value))
}

fn smooth_step_value(t: f64) -> f64 {
    if t <= 1.0 {
        0.0
    } else if t >= 2.0 {
        1.0
    } else if t > 1.5 {
        1.0 - smooth_step_value(3.0 - t)
    } else {
        bump_cdf(2.0 * t - 3.0) / bump_mass()
    }
}

fn smooth_step_jet(t: f64, len: usize) -> Vec<f64> {
    let mut v = vec![0.0; len];
    v[0] = smooth_step_value(t);
    if t <= 1.0 || t >= 2.0 || len == 1 {
        return v;
    }
    // s' (t) = 2 bump(2t - 3) / mass, so s^(n) = 2^n bump^(n-1)(2t - 3) / mass
    let b = bump_jet(2.0 * t - 3.0, len - 1);
    let mass = bump_mass();
    let mut p2 = 2.0;
    for n in 1..len {
        v[n] = p2 * b[n - 1] / (n as f64 * mass);
        p2 *= 2.0;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(f: &AnalyticFn1D, t: f64, n: usize) -> f64 {
        // high-order central difference of the (n-1)-th exact derivative
        let h = 1e-5;
        let g = |x| f.eval_derivative(x, n - 1);
        (-g(t + 2.0 * h) + 8.0 * g(t + h) - 8.0 * g(t - h) + g(t - 2.0 * h)) / (12.0 * h)
    }

    #[test]
    fn bump_is_one_at_origin_and_vanishes_outside() {
        let b = AnalyticFn1D::bump();
        assert_eq!(b.eval(0.0), 1.0);
        assert_eq!(b.eval(1.0), 0.0);
        assert_eq!(b.eval(-1.3), 0.0);
        assert_eq!(b.support(), Some(Interval::new(-1.0, 1.0)));
    }

    #[test]
    fn bump_derivatives_match_closed_forms() {
        // b' = -2t/(1-t^2)^2 b
        let b = AnalyticFn1D::bump();
        for &t in &[-0.7, -0.2, 0.3, 0.85] {
            let u = 1.0 - t * t;
            let exact = -2.0 * t / (u * u) * b.eval(t);
            assert!((b.eval_derivative(t, 1) - exact).abs() < 1e-13);
        }
        for n in 2..6 {
            for &t in &[-0.5, 0.1, 0.6] {
                let e = b.eval_derivative(t, n);
                assert!((e - fd(&b, t, n)).abs() < 1e-6 * (1.0 + e.abs()), "n={n} t={t}");
            }
        }
    }

    #[test]
    fn smooth_step_values_and_symmetry() {
        let s = AnalyticFn1D::smooth_step();
        assert_eq!(s.eval(0.5), 0.0);
        assert_eq!(s.eval(2.5), 1.0);
        assert!((s.eval(1.5) - 0.5).abs() < 1e-15);
        for &t in &[1.1, 1.3, 1.77] {
            assert!((s.eval(t) + s.eval(3.0 - t) - 1.0).abs() < 1e-14);
        }
        // s' integrates back to s
        let mass = gauss_composite(1.0, 1.7, 40, |x| s.eval_derivative(x, 1));
        assert!((mass - s.eval(1.7)).abs() < 1e-12);
        for n in 1..5 {
            let e = s.eval_derivative(1.4, n);
            assert!((e - fd(&s, 1.4, n)).abs() < 1e-5 * (1.0 + e.abs()));
        }
    }

    #[test]
    fn tanh_and_gaussian_jets() {
        let th = AnalyticFn1D::tanh();
        let t: f64 = 0.4;
        let sech2 = 1.0 - t.tanh().powi(2);
        assert!((th.eval_derivative(t, 1) - sech2).abs() < 1e-15);
        assert!((th.eval_derivative(t, 2) + 2.0 * t.tanh() * sech2).abs() < 1e-14);
        let g = AnalyticFn1D::gaussian();
        let exact = (4.0 * t * t - 2.0) * (-t * t).exp();
        assert!((g.eval_derivative(t, 2) - exact).abs() < 1e-14);
    }

    #[test]
    fn exp_abs_derivatives_are_one_sided() {
        let e = AnalyticFn1D::exp_abs(2.0).unwrap();
        assert!((e.eval_derivative(0.3, 2) - 4.0 * (-0.6f64).exp()).abs() < 1e-14);
        assert!((e.eval_derivative(-0.3, 1) - 2.0 * (-0.6f64).exp()).abs() < 1e-14);
        assert_eq!(e.smoothness(), Smoothness::Finite(0));
    }

    #[test]
    fn flat_exp_vanishes_to_all_orders() {
        let f = AnalyticFn1D::flat_exp();
        for n in 0..8 {
            assert_eq!(f.eval_derivative(0.0, n), 0.0);
            assert!(f.eval_derivative(0.02, n).abs() < 1e-300);
        }
        let t: f64 = 0.7;
        let exact = 2.0 / t.powi(3) * (-1.0 / (t * t)).exp();
        assert!((f.eval_derivative(t, 1) - exact).abs() < 1e-14);
    }

    #[test]
    fn pos_pow_support_and_smoothness() {
        let f = AnalyticFn1D::pos_pow(3).unwrap();
        assert_eq!(f.smoothness(), Smoothness::Finite(2));
        assert_eq!(f.eval(-0.5), 0.0);
        assert!((f.eval_derivative(0.5, 3) - 6.0).abs() < 1e-14);
        assert_eq!(f.eval_derivative(0.5, 4), 0.0);
        assert!(AnalyticFn1D::pos_pow(0).is_err());
    }

    #[test]
    fn affine_and_product_chain_rules() {
        let b = AnalyticFn1D::bump();
        let f = b.compose_affine(2.0, 0.5).unwrap();
        assert!((f.eval_derivative(0.1, 1) - 2.0 * b.eval_derivative(0.7, 1)).abs() < 1e-14);
        assert_eq!(f.support(), Some(Interval::new(-0.75, 0.25)));
        let p = b.mul(&AnalyticFn1D::monomial(2));
        let t = 0.3;
        let exact = 2.0 * t * b.eval(t) + t * t * b.eval_derivative(t, 1);
        assert!((p.eval_derivative(t, 1) - exact).abs() < 1e-14);
    }

    #[test]
    fn plateau_is_one_inside_and_zero_outside() {
        let p = AnalyticFn1D::plateau(Interval::new(-0.5, 0.5), Interval::new(-1.0, 1.2)).unwrap();
        assert_eq!(p.eval(0.0), 1.0);
        assert_eq!(p.eval(0.5), 1.0);
        assert_eq!(p.eval(-1.0), 0.0);
        assert_eq!(p.eval(1.3), 0.0);
        assert_eq!(p.support(), Some(Interval::new(-1.0, 1.2)));
        assert!(AnalyticFn1D::plateau(Interval::new(-1.0, 0.5), Interval::new(-1.0, 1.0)).is_err());
    }

    #[test]
    fn field_power_translation_is_plain_derivative() {
        let b = AnalyticFn1D::bump();
        let one = AnalyticFn1D::constant(1.0);
        assert!((field_power(&one, &b, 3, 0.2) - b.eval_derivative(0.2, 3)).abs() < 1e-12);
        // X = t d/dt applied twice to t^3 gives 9 t^3
        let t = AnalyticFn1D::monomial(1);
        let c = AnalyticFn1D::monomial(3);
        assert!((field_power(&t, &c, 2, 0.5) - 9.0 * 0.125).abs() < 1e-14);
    }

    #[test]
    fn non_finite_reports_node() {
        let f = AnalyticFn1D::monomial(1).compose_affine(1e308, 0.0).unwrap().scale(10.0);
        let err = f.try_eval(1.0).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }
}
