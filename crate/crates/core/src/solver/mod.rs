//! Iteration engine for split feasibility problems with a fixed-point
//! constraint.

mod problem;
mod schedule;
mod stepper;

pub use problem::{adaptive_tau, f_value, grad_f, inertial_theta, SfpProblem, KNOWN_SOLUTION_TOL};
pub use schedule::{
    validate_schedule, Condition, ConditionCheck, ParameterSchedule, Sequence, Status, StepParams,
    ValidationReport, SUM_TOL,
};
pub use stepper::{
    psi_diagnostic, run, step_algorithm1, CompositionMode, RunError, RunHistory, StepOutcome,
    StepRecord, StepSize, Stepper, StepperConfig, Stopping, TauNumerator, Termination, Variant,
    DIVERGENCE_NORM, MONITOR_TOL,
};
