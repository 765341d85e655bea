//! Discrete p-energies, the renormalization fixed point and p-harmonic
//! extension.

pub mod extension;
pub mod fixed_point;
pub mod form;
pub mod function;
pub mod local;
pub mod property_e;
pub mod spline;

pub use extension::{
    discrete_energy, lambda_apply, lambda_energy, p_harmonic_extension, rescaled_energy, trace_min,
    Extender,
};
pub use fixed_point::{
    fixed_point_solve, sigma_p_sharp, trace_energy, FamilyChoice, FixedPointOptions,
    ScalingFixedPoint,
};
pub use form::{EnergyForm, FormFamily, FormKind};
pub use function::DiscreteFunction;
pub use local::CellProblem;
pub use property_e::{property_e_report, PropertyEReport};
