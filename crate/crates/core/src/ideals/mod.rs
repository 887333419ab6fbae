//! Functions vanishing to a given order on an invariant submanifold: order
//! estimates, division by the transverse coordinate, envelopes of flat
//! functions, and the product experiments for the ideals they generate.

pub mod envelope;
pub mod experiment;
pub mod flat;
pub mod hadamard;
pub mod module;
pub mod order;

pub use envelope::{flat_envelope, invert_axis, resample_inverted, schwartz_envelope};
pub use hadamard::{hadamard_split, hadamard_step, HadamardSplit};
pub use order::{order_of_1d, order_of_profile, vanishing_order, Order, OrderEstimate, P_MAX};
pub use flat::{flat_split, quotient_bounds, sup_table, FlatSplit, QuotientBound, SupEntry};
pub use module::{in_target_chart, in_target_chart_with, module_factorize, module_factorize_with, FlowTable, BaseFactor, ModuleSplit, Side};
pub use experiment::{ideal_product_experiment, Direction, IdealConfig, IdealReport, IdealRow, IdealTolerances};
