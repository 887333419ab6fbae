use serde::{Deserialize, Serialize};
use std::fmt;

/// Closed interval `[lo, hi]`; either end may be infinite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const REAL_LINE: Interval = Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY };

    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "empty interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn symmetric(r: f64) -> Self {
        Interval::new(-r, r)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Strict containment of `other` in the open interval `(lo, hi)`.
    pub fn interior_contains(&self, other: &Interval) -> bool {
        self.lo < other.lo && other.hi < self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }

    /// Minkowski sum.
    pub fn sum(&self, other: &Interval) -> Interval {
        Interval { lo: self.lo + other.lo, hi: self.hi + other.hi }
    }

    pub fn negate(&self) -> Interval {
        Interval { lo: -self.hi, hi: -self.lo }
    }

    pub fn expand(&self, by: f64) -> Interval {
        Interval { lo: self.lo - by, hi: self.hi + by }
    }

    /// Preimage under `t -> a t + b`.
    pub fn affine_preimage(&self, a: f64, b: f64) -> Interval {
        let p = (self.lo - b) / a;
        let q = (self.hi - b) / a;
        Interval { lo: p.min(q), hi: p.max(q) }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Declared support of a function: `None` for the zero function.
pub type Support = Option<Interval>;

pub(crate) fn hull_opt(a: Support, b: Support) -> Support {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.hull(&y)),
        (Some(x), None) | (None, Some(x)) => Some(x),
        (None, None) => None,
    }
}

pub(crate) fn intersect_opt(a: Support, b: Support) -> Support {
    match (a, b) {
        (Some(x), Some(y)) => x.intersect(&y),
        _ => None,
    }
}

/// Axis-aligned closed box in the plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Box2 {
    pub axis0: Interval,
    pub axis1: Interval,
}

impl Box2 {
    pub fn new(axis0: Interval, axis1: Interval) -> Self {
        Box2 { axis0, axis1 }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.axis0.contains(x) && self.axis1.contains(y)
    }

    pub fn contains_box(&self, other: &Box2) -> bool {
        self.axis0.contains_interval(&other.axis0) && self.axis1.contains_interval(&other.axis1)
    }

    pub fn intersect(&self, other: &Box2) -> Option<Box2> {
        Some(Box2 { axis0: self.axis0.intersect(&other.axis0)?, axis1: self.axis1.intersect(&other.axis1)? })
    }

    pub fn hull(&self, other: &Box2) -> Box2 {
        Box2 { axis0: self.axis0.hull(&other.axis0), axis1: self.axis1.hull(&other.axis1) }
    }

    pub fn transpose(&self) -> Box2 {
        Box2 { axis0: self.axis1, axis1: self.axis0 }
    }

    pub fn axis(&self, axis: usize) -> Interval {
        if axis == 0 {
            self.axis0
        } else {
            self.axis1
        }
    }

    pub fn with_axis(mut self, axis: usize, iv: Interval) -> Box2 {
        if axis == 0 {
            self.axis0 = iv;
        } else {
            self.axis1 = iv;
        }
        self
    }
}

impl fmt::Display for Box2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} x {}", self.axis0, self.axis1)
    }
}
