//! Split feasibility problems over fixed-point sets of demicontractive maps.
//!
//! The crate is organized bottom-up:
//!
//! * [`hilbert`]: vectors, inner products and dense linear maps with adjoints.
//! * [`sets`]: closed convex sets with exact metric projections.
//! * [`mappings`]: self-maps tagged with a regularity class, the averaging
//!   transform `S_λ = (1 − λ)I + λS`, and sampled class checks.
//! * [`solver`]: the CQ iteration, its self-adaptive and viscosity variants
//!   and the inertial averaged iteration, with schedule validation and
//!   per-step monitors.

pub mod error;
pub mod hilbert;
pub mod mappings;
pub mod sampling;
pub mod sets;
pub mod solver;

pub use error::{Error, Result};
pub use hilbert::{inner_product, norm, BoundedLinearMap, Vector};
pub use mappings::{average, AveragedMapping, DomainSampler, MappingClass, MappingSpec, SelfMap};
pub use sets::ConvexSet;
pub use solver::{ParameterSchedule, SfpProblem, StepperConfig};
