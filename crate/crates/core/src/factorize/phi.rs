use crate::error::{Error, Result};
use crate::gridfn::{AnalyticFn1D, Grid1, GridFn, GridFn1D, GridFn2D};
use crate::groupoid::{apply_field, LineAction};

/// Sampling layout of a function on a manifold: an interval or a rectangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Layout {
    D1(Grid1),
    D2(Grid1, Grid1),
}

impl Layout {
    pub fn of(f: &GridFn) -> Layout {
        match f {
            GridFn::D1(g) => Layout::D1(g.grid()),
            GridFn::D2(g) => Layout::D2(g.grid(0), g.grid(1)),
        }
    }

    pub fn zeros(&self) -> GridFn {
        match *self {
            Layout::D1(g) => GridFn::D1(GridFn1D::zeros(g)),
            Layout::D2(a, b) => GridFn::D2(GridFn2D::zeros(a, b)),
        }
    }
}

/// The function being factorized. Closed-form sources keep `X^n phi` exact;
/// sampled sources fall back to stencils.
#[derive(Clone, Debug)]
pub enum PhiSource {
    Line(AnalyticFn1D),
    /// `sum_k u_k(x0) v_k(x1)`.
    Terms(Vec<(AnalyticFn1D, AnalyticFn1D)>),
    Sampled(GridFn),
}

/// `(a d/dx)^n v` as a closed-form expression.
pub fn field_apply(a: &AnalyticFn1D, v: &AnalyticFn1D, n: usize) -> AnalyticFn1D {
    if let Some(c) = a.as_constant() {
        return v.derivative(n).scale(c.powi(n as i32));
    }
    let mut cur = v.clone();
    for _ in 0..n {
        cur = a.mul(&cur.derivative(1));
    }
    cur
}

impl PhiSource {
    pub fn separable(u: AnalyticFn1D, v: AnalyticFn1D) -> Self {
        PhiSource::Terms(vec![(u, v)])
    }

    pub fn sample(&self, layout: Layout) -> Result<GridFn> {
        match (self, layout) {
            (PhiSource::Line(f), Layout::D1(g)) => Ok(GridFn::D1(GridFn1D::sample(f, g)?)),
            (PhiSource::Terms(terms), Layout::D2(g0, g1)) => {
                let mut acc = GridFn2D::zeros(g0, g1);
                for (u, v) in terms {
                    let t = GridFn2D::outer(&GridFn1D::sample(u, g0)?, &GridFn1D::sample(v, g1)?)?;
                    acc = if acc.support().is_none() { t } else { acc.add(&t)? };
                }
                Ok(GridFn::D2(acc))
            }
            (PhiSource::Sampled(f), l) if Layout::of(f) == l => Ok(f.clone()),
            _ => Err(Error::invalid("source does not match the requested layout")),
        }
    }

    /// `X^n` of the source for the generator of `action`.
    pub fn apply_field(&self, action: &LineAction, n: usize) -> Result<PhiSource> {
        let a = action.flow().field();
        match (self, action) {
            (PhiSource::Line(f), LineAction::Interval(_)) => Ok(PhiSource::Line(field_apply(a, f, n))),
            (PhiSource::Terms(terms), LineAction::Fiber { axis, .. }) => Ok(PhiSource::Terms(
                terms
                    .iter()
                    .map(|(u, v)| if *axis == 0 { (field_apply(a, u, n), v.clone()) } else { (u.clone(), field_apply(a, v, n)) })
                    .collect(),
            )),
            (PhiSource::Sampled(f), _) => Ok(PhiSource::Sampled(apply_field(action, f, n)?)),
            _ => Err(Error::invalid("source does not match the dimension of the action")),
        }
    }

    /// `sum_i c_i s_i` of sources of the same kind.
    pub fn combine(parts: &[(f64, PhiSource)]) -> Result<PhiSource> {
        match parts.first() {
            None => Err(Error::invalid("empty combination")),
            Some((_, PhiSource::Line(_))) => {
                let mut terms = Vec::new();
                for (c, p) in parts {
                    let PhiSource::Line(f) = p else { return Err(Error::invalid("mixed source kinds")) };
                    terms.push(f.scale(*c));
                }
                Ok(PhiSource::Line(AnalyticFn1D::sum(terms)))
            }
            Some((_, PhiSource::Terms(_))) => {
                let mut terms = Vec::new();
                for (c, p) in parts {
                    let PhiSource::Terms(t) = p else { return Err(Error::invalid("mixed source kinds")) };
                    terms.extend(t.iter().map(|(u, v)| (u.scale(*c), v.clone())));
                }
                Ok(PhiSource::Terms(terms))
            }
            Some((_, PhiSource::Sampled(_))) => {
                let mut acc: Option<GridFn> = None;
                for (c, p) in parts {
                    let PhiSource::Sampled(f) = p else { return Err(Error::invalid("mixed source kinds")) };
                    let s = f.scale(*c);
                    acc = Some(match acc {
                        None => s,
                        Some(a) => a.add(&s)?,
                    });
                }
                Ok(PhiSource::Sampled(acc.expect("nonempty")))
            }
        }
    }
}
