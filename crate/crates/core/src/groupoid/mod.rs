//! Concrete Lie groupoids over the line: the line group, the pair groupoid of
//! an interval and the transformation groupoid of a flow, with their
//! convolution algebras and integrated representations.
//!
//! Haar systems are Lebesgue measure on source fibers throughout.

pub mod convolve;
pub mod flow;
pub mod instance;
pub mod rep;

pub use convolve::{convolve, restrict_to_gx};
pub use flow::FlowField;
pub use instance::{FieldSpec, GridSpec, GroupoidInstance, InstanceDescriptor, InstanceKind, NamedField, OdeSpec};
pub use rep::{apply_field, integrated_rep, integrated_rep_line, sample_arrow_fn, GroupoidAction, LineAction};
