use crate::error::{Error, Result};
use crate::gridfn::GridFn2D;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Orders at or above this are reported as flat.
pub const P_MAX: f64 = 12.0;
/// Upper end of the regression window in the transverse coordinate.
pub const WINDOW_HI: f64 = 0.5;
/// The regression window starts this many grid steps away from the submanifold.
pub const WINDOW_LO_STEPS: f64 = 4.0;
const WINDOW_POINTS: usize = 32;

/// Vanishing order: a count or infinity (flat).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Order {
    Finite(u32),
    Infinite,
}

impl Order {
    pub fn is_infinite(self) -> bool {
        matches!(self, Order::Infinite)
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Order::Finite(p) => p as f64,
            Order::Infinite => f64::INFINITY,
        }
    }

    pub fn plus(self, other: Order) -> Order {
        match (self, other) {
            (Order::Finite(a), Order::Finite(b)) => Order::Finite(a + b),
            _ => Order::Infinite,
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::Finite(p) => write!(f, "{p}"),
            Order::Infinite => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for Order {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inf" | "infinity" | "oo" => Ok(Order::Infinite),
            _ => s
                .parse::<u32>()
                .map(Order::Finite)
                .map_err(|_| Error::invalid(format!("order must be a non-negative integer or `inf`, got `{s}`"))),
        }
    }
}

impl Serialize for Order {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Order::Finite(p) => s.serialize_u32(*p),
            Order::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Order {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(u32),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(p) => Ok(Order::Finite(p)),
            Raw::S(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrderEstimate {
    pub p_hat: f64,
    pub window: [f64; 2],
    pub r2: f64,
    pub flat_flag: bool,
}

impl OrderEstimate {
    fn flat(window: [f64; 2]) -> Self {
        OrderEstimate { p_hat: P_MAX, window, r2: 1.0, flat_flag: true }
    }

    /// Meets `required` within `slack`; flat functions meet every order.
    pub fn at_least(&self, required: Order, slack: f64) -> bool {
        match required {
            Order::Infinite => self.flat_flag,
            Order::Finite(p) => self.flat_flag || self.p_hat >= p as f64 - slack,
        }
    }
}

/// Largest `|v|` over the other axis, for every node along `axis`.
pub fn transverse_profile(f: &GridFn2D, axis: usize) -> Vec<f64> {
    f.axis_sup_profile(axis)
}

/// Log-log slope of `sup |f|` against the distance to `{x = 0}` along `axis`.
pub fn vanishing_order(f: &GridFn2D, axis: usize) -> Result<OrderEstimate> {
    let grid = f.grid(axis);
    if !(grid.x0 <= 0.0 && grid.last() >= 0.0) {
        return Err(Error::invalid(format!("grid {} does not straddle the submanifold x = 0", grid.extent())));
    }
    order_of_profile(&transverse_profile(f, axis), grid.x0, grid.dx)
}

/// Same estimate for a profile sampled at `x0 + i dx`; one-sided grids that
/// start next to 0 are accepted.
pub fn order_of_profile(profile: &[f64], x0: f64, dx: f64) -> Result<OrderEstimate> {
    let n = profile.len();
    let last = x0 + (n as f64 - 1.0) * dx;
    let lo = WINDOW_LO_STEPS * dx;
    let gap = if x0 <= 0.0 && last >= 0.0 { 0.0 } else { x0.abs().min(last.abs()) };
    if gap >= lo {
        return Err(Error::invalid(format!("grid [{x0}, {last}] does not reach the submanifold x = 0")));
    }
    let reach = x0.abs().max(last.abs()).min(WINDOW_HI);
    if reach <= lo {
        return Err(Error::GridTooSmall { have: n, need: (2.0 * WINDOW_LO_STEPS) as usize + 3, what: "order regression window".into() });
    }
    let window = [lo, reach];
    let node = |x: f64| -> Option<usize> {
        let i = ((x - x0) / dx).round();
        (i >= 0.0 && (i as usize) < n).then_some(i as usize)
    };
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(WINDOW_POINTS);
    let mut zero_inside = false;
    let mut prev: Option<usize> = None;
    for k in 0..WINDOW_POINTS {
        let r = lo * (reach / lo).powf(k as f64 / (WINDOW_POINTS - 1) as f64);
        let Some(ip) = node(r).or_else(|| node(-r)) else { continue };
        if prev == Some(ip) {
            continue;
        }
        prev = Some(ip);
        let rr = (x0 + ip as f64 * dx).abs();
        let m = [node(rr), node(-rr)].into_iter().flatten().map(|i| profile[i].abs()).fold(0.0, f64::max);
        if m > f64::MIN_POSITIVE {
            pts.push((rr.ln(), m.ln()));
        } else {
            zero_inside = true;
        }
    }
    if pts.len() < 3 {
        return Ok(OrderEstimate::flat(window));
    }
    let (slope, r2) = fit(&pts);
    let p_hat = slope.max(0.0);
    // the local slope of a flat function grows without bound toward 0, so the
    // inner half of the window decides flatness as well
    let inner = fit(&pts[..pts.len().div_ceil(2).max(3)]).0;
    // vanishing identically near the submanifold while nonzero farther out
    let flat_flag = p_hat >= P_MAX || inner >= P_MAX || zero_inside;
    Ok(OrderEstimate { p_hat: if flat_flag { p_hat.max(P_MAX) } else { p_hat }, window, r2, flat_flag })
}

/// Least-squares slope and coefficient of determination.
fn fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, r2)
}

/// Order of a one-dimensional function at 0.
pub fn order_of_1d(f: &crate::gridfn::GridFn1D) -> Result<OrderEstimate> {
    let g = f.grid();
    order_of_profile(f.samples(), g.x0, g.dx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_power() {
        let pts: Vec<(f64, f64)> = (1..20).map(|i| {
            let x = 0.01 * i as f64;
            (x.ln(), (3.0 * x.powi(3)).ln())
        }).collect();
        let (s, r2) = fit(&pts);
        assert!((s - 3.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn order_parses_and_adds() {
        assert_eq!("inf".parse::<Order>().unwrap(), Order::Infinite);
        assert_eq!("3".parse::<Order>().unwrap(), Order::Finite(3));
        assert!("-1".parse::<Order>().is_err());
        assert_eq!(Order::Finite(1).plus(Order::Finite(2)), Order::Finite(3));
        assert_eq!(Order::Finite(1).plus(Order::Infinite), Order::Infinite);
        let j = serde_json::to_string(&[Order::Finite(2), Order::Infinite]).unwrap();
        assert_eq!(j, r#"[2,"inf"]"#);
        let back: Vec<Order> = serde_json::from_str(&j).unwrap();
        assert_eq!(back, vec![Order::Finite(2), Order::Infinite]);
    }

    #[test]
    fn profile_orders() {
        let dx = 0.005;
        let xs: Vec<f64> = (0..=400).map(|i| -1.0 + i as f64 * dx).collect();
        let est = |f: &dyn Fn(f64) -> f64| order_of_profile(&xs.iter().map(|x| f(*x)).collect::<Vec<_>>(), -1.0, dx).unwrap();
        let e2 = est(&|x| x * x);
        assert!((e2.p_hat - 2.0).abs() < 1e-6 && !e2.flat_flag);
        let e0 = est(&|x| 2.0 + x.cos());
        assert!(e0.p_hat < 0.05);
        assert!(est(&|x| if x == 0.0 { 0.0 } else { (-1.0 / (x * x)).exp() }).flat_flag);
        assert!(est(&|_| 0.0).flat_flag);
    }
}
