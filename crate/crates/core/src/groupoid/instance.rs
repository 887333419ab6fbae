use super::flow::FlowField;
use crate::error::{Error, Result};
use crate::gridfn::{AnalyticFn1D, Grid1, Interval};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    /// The additive group of the line.
    Line,
    /// Pair groupoid `B x B`; arrows `(x, y)` run from source `x` to target `y`.
    Pair,
    /// Transformation groupoid of a flow on `B`; arrow `(t, b)` runs from `b` to `Phi_t(b)`.
    Transformation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedField {
    Zero,
    Unit,
}

/// Vector field on the base: `"zero"`, `"unit"`, or `{"tanh_k": k}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldSpec {
    Named(NamedField),
    TanhPower { tanh_k: u32 },
}

impl Default for FieldSpec {
    fn default() -> Self {
        FieldSpec::Named(NamedField::Unit)
    }
}

impl FieldSpec {
    pub fn build(&self) -> AnalyticFn1D {
        match self {
            FieldSpec::Named(NamedField::Zero) => AnalyticFn1D::zero(),
            FieldSpec::Named(NamedField::Unit) => AnalyticFn1D::constant(1.0),
            FieldSpec::TanhPower { tanh_k: 0 } => AnalyticFn1D::constant(1.0),
            FieldSpec::TanhPower { tanh_k } => AnalyticFn1D::tanh().pow(*tanh_k),
        }
    }

    /// Parses `zero`, `unit` or `tanh_k:K`.
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(FieldSpec::Named(NamedField::Zero)),
            "unit" => Ok(FieldSpec::Named(NamedField::Unit)),
            _ => {
                let k = s
                    .strip_prefix("tanh_k:")
                    .or_else(|| s.strip_prefix("tanh^"))
                    .and_then(|k| k.parse().ok())
                    .ok_or_else(|| Error::invalid(format!("unknown field `{s}`; expected zero, unit or tanh_k:K")))?;
                Ok(FieldSpec::TanhPower { tanh_k: k })
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Spacing along fibers (the line, or the flow-time axis).
    pub dx: f64,
    /// Half-width of the fiber axis.
    #[serde(default = "default_fiber_radius")]
    pub fiber_radius: f64,
    /// Spacing along the base; defaults to `dx`.
    #[serde(default)]
    pub base_dx: Option<f64>,
}

fn default_fiber_radius() -> f64 {
    1.5
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdeSpec {
    pub h_flow: f64,
    #[serde(rename = "T_max", alias = "t_max")]
    pub t_max: f64,
}

impl Default for OdeSpec {
    fn default() -> Self {
        OdeSpec { h_flow: 1e-3, t_max: 10.0 }
    }
}

/// Serializable description of a groupoid instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceDescriptor {
    pub kind: InstanceKind,
    pub base_box: [f64; 2],
    #[serde(default)]
    pub field: FieldSpec,
    pub grid: GridSpec,
    #[serde(default)]
    pub ode: OdeSpec,
}

/// A concrete groupoid with its sampling grids.
#[derive(Clone, Debug)]
pub struct GroupoidInstance {
    pub kind: InstanceKind,
    /// Base box `B`.
    pub base: Interval,
    /// Flow on the base: the action for transformation groupoids, the frame
    /// field for pair groupoids, translation for the line.
    pub flow: FlowField,
    /// Grid of the fiber axis: the line itself, or the flow-time axis.
    pub fiber_grid: Grid1,
    /// Grid of the base (both axes of the pair groupoid).
    pub base_grid: Grid1,
    pub descriptor: InstanceDescriptor,
}

impl GroupoidInstance {
    pub fn from_descriptor(d: &InstanceDescriptor) -> Result<Self> {
        let [lo, hi] = d.base_box;
        if !(lo < hi) {
            return Err(Error::invalid(format!("empty base box [{lo}, {hi}]")));
        }
        let base = Interval::new(lo, hi);
        let a = d.field.build();
        let flow = match d.kind {
            InstanceKind::Line => FlowField::translation(d.ode.t_max),
            _ => FlowField::new(a, d.ode.h_flow, d.ode.t_max)?,
        };
        if d.kind == InstanceKind::Pair && d.field == FieldSpec::Named(NamedField::Zero) {
            return Err(Error::invalid("the frame field of a pair groupoid must not vanish"));
        }
        let dx = d.grid.dx;
        let base_dx = d.grid.base_dx.unwrap_or(dx);
        let fiber_grid = match d.kind {
            InstanceKind::Line | InstanceKind::Transformation => Grid1::symmetric(d.grid.fiber_radius, dx)?,
            InstanceKind::Pair => Grid1::covering(lo, hi, base_dx)?,
        };
        let base_grid = Grid1::covering(lo, hi, base_dx)?;
        Ok(GroupoidInstance { kind: d.kind, base, flow, fiber_grid, base_grid, descriptor: d.clone() })
    }

    pub fn line(fiber_radius: f64, dx: f64) -> Result<Self> {
        Self::from_descriptor(&InstanceDescriptor {
            kind: InstanceKind::Line,
            base_box: [-1.0, 1.0],
            field: FieldSpec::default(),
            grid: GridSpec { dx, fiber_radius, base_dx: None },
            ode: OdeSpec::default(),
        })
    }

    pub fn pair(base: Interval, dx: f64, field: FieldSpec) -> Result<Self> {
        Self::from_descriptor(&InstanceDescriptor {
            kind: InstanceKind::Pair,
            base_box: [base.lo, base.hi],
            field,
            grid: GridSpec { dx, fiber_radius: base.width(), base_dx: None },
            ode: OdeSpec::default(),
        })
    }

    pub fn transformation(base: Interval, fiber_radius: f64, dt: f64, db: f64, field: FieldSpec) -> Result<Self> {
        Self::from_descriptor(&InstanceDescriptor {
            kind: InstanceKind::Transformation,
            base_box: [base.lo, base.hi],
            field,
            grid: GridSpec { dx: dt, fiber_radius, base_dx: Some(db) },
            ode: OdeSpec::default(),
        })
    }

    /// Grids of arrow coordinates for the two-dimensional instances.
    pub fn arrow_grids(&self) -> Result<(Grid1, Grid1)> {
        match self.kind {
            InstanceKind::Line => Err(Error::invalid("the line group has one-dimensional arrows")),
            InstanceKind::Pair => Ok((self.base_grid, self.base_grid)),
            InstanceKind::Transformation => Ok((self.fiber_grid, self.base_grid)),
        }
    }

    pub fn source(&self, g: (f64, f64)) -> f64 {
        match self.kind {
            InstanceKind::Line => 0.0,
            InstanceKind::Pair => g.0,
            InstanceKind::Transformation => g.1,
        }
    }

    pub fn target(&self, g: (f64, f64)) -> Result<f64> {
        match self.kind {
            InstanceKind::Line => Ok(0.0),
            InstanceKind::Pair => Ok(g.1),
            InstanceKind::Transformation => self.flow.flow(g.0, g.1),
        }
    }

    pub fn inverse(&self, g: (f64, f64)) -> Result<(f64, f64)> {
        match self.kind {
            InstanceKind::Line => Ok((-g.0, 0.0)),
            InstanceKind::Pair => Ok((g.1, g.0)),
            InstanceKind::Transformation => Ok((-g.0, self.flow.flow(g.0, g.1)?)),
        }
    }

    /// `g * h`, defined when `source(g) = target(h)`.
    pub fn multiply(&self, g: (f64, f64), h: (f64, f64)) -> Result<(f64, f64)> {
        let tol = 1e-9;
        match self.kind {
            InstanceKind::Line => Ok((g.0 + h.0, 0.0)),
            InstanceKind::Pair => {
                if (g.0 - h.1).abs() > tol {
                    return Err(Error::invalid("arrows are not composable"));
                }
                Ok((h.0, g.1))
            }
            InstanceKind::Transformation => {
                if (g.1 - self.flow.flow(h.0, h.1)?).abs() > tol {
                    return Err(Error::invalid("arrows are not composable"));
                }
                Ok((g.0 + h.0, h.1))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descriptor_round_trips_through_json() {
        let json = r#"{"kind":"transformation","base_box":[-2,2],"field":{"tanh_k":1},"grid":{"dx":0.01},"ode":{"h_flow":0.001,"T_max":10}}"#;
        let d: InstanceDescriptor = serde_json::from_str(json).unwrap();
        assert_eq!(d.field, FieldSpec::TanhPower { tanh_k: 1 });
        let back: InstanceDescriptor = serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
        assert_eq!(back, d);
        let z: FieldSpec = serde_json::from_str("\"zero\"").unwrap();
        assert_eq!(z, FieldSpec::Named(NamedField::Zero));
    }

    #[test]
    fn structure_maps_of_the_transformation_groupoid() {
        let g = GroupoidInstance::transformation(Interval::new(-2.0, 2.0), 1.0, 0.01, 0.01, FieldSpec::TanhPower { tanh_k: 1 })
            .unwrap();
        let a = (0.3, 0.5);
        let ai = g.inverse(a).unwrap();
        let unit = g.multiply(ai, a).unwrap();
        assert!(unit.0.abs() < 1e-15 && (unit.1 - 0.5).abs() < 1e-15);
        assert!((g.source(ai) - g.target(a).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn field_parsing() {
        assert_eq!(FieldSpec::parse("tanh_k:2").unwrap(), FieldSpec::TanhPower { tanh_k: 2 });
        assert!(FieldSpec::parse("sin").is_err());
    }
}
