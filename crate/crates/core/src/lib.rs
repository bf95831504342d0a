//! Spiderweb central configurations of the N-body problem: construction by
//! zero-mass ring insertion and mass continuation, and rigorous certification
//! of existence and local uniqueness by the radii-polynomial method.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod certify;
pub mod interval;
pub mod model;
pub mod params;
pub mod scalar;
pub mod solver;

pub use analysis::{mass_profile, scan, spacing_profile, MassProfile, MassSpec, ScanConfig, SpacingProfile};
pub use certify::{certify, dominance_check, h_ell_check, Certificate, CertifyError, HCheckReport};
pub use interval::{Interval, IntervalError};
pub use model::{Hessian, ModelError, Source, Spokes, System};
pub use params::{Configuration, ParamError, RadiiVector, SpiderwebParams};
pub use scalar::Scalar;
pub use solver::{
    build_configuration, continue_mass, insert_zero_mass_ring, newton_solve, solve_single_ring,
    ContinuationSettings, InsertionGap, SolverError,
};

/// Floating-point instantiation used by the solver.
pub type FloatSystem = System<f64>;
/// Single-precision instantiation.
pub type F32System = System<f32>;
/// Interval instantiation used by the certifier.
pub type IntervalSystem = System<Interval>;
