//! One stepper covering the CQ iteration, its self-adaptive variant, the
//! viscosity iteration and the inertial averaged iteration, plus the driver
//! loop with its stopping rule and runtime monitors.

use thiserror::Error;

use super::problem::{inertial_theta, tau_from, SfpProblem};
use super::schedule::{ParameterSchedule, StepParams};
use crate::error::{check_dim, Error, Result};
use crate::hilbert::Vector;
use crate::mappings::{average, AveragedMapping, MappingClass, SelfMap};

/// Iterates with norm above this are treated as divergence.
pub const DIVERGENCE_NORM: f64 = 1e12;

/// Slack allowed in the Fejér and quasi-nonexpansiveness monitors.
pub const MONITOR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    /// `x ← P_C(x − γ∇f(x))` with fixed `γ ∈ (0, 2/‖A‖²)`.
    CqFixedStep { step: f64 },
    /// `x ← P_C(x − τₙ∇f(x))` with the self-adaptive `τₙ`.
    CqAdaptive,
    /// Viscosity iteration: no inertia, `λ = 1`, statement-form composition.
    Viscosity,
    /// The full inertial averaged iteration.
    Algorithm1,
}

/// Where `P_C` and the `(1 − δₙ)` factor apply when forming `yₙ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompositionMode {
    /// `yₙ = P_C((1 − δₙ)(uₙ − τₙ∇f(uₙ)) + δₙS_λuₙ)`, the form the
    /// convergence argument is written for.
    Proof,
    /// `yₙ = P_C((1 − δₙ)uₙ − τₙ∇f(uₙ)) + δₙS_λuₙ`
    Statement,
    /// `yₙ = P_C((1 − δₙ)uₙ + δₙS_λuₙ − τₙ∇f(uₙ))`
    Explore,
}

impl CompositionMode {
    pub const ALL: [CompositionMode; 3] = [Self::Proof, Self::Statement, Self::Explore];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Proof => "proof",
            Self::Statement => "statement",
            Self::Explore => "explore",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "proof" | "proof_form" => Ok(Self::Proof),
            "statement" | "statement_form" => Ok(Self::Statement),
            "explore" => Ok(Self::Explore),
            _ => Err(Error::InvalidInput(format!(
                "unknown composition mode {name:?} (expected proof, statement or explore)"
            ))),
        }
    }
}

/// Which point supplies `f` in the numerator of the adaptive step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TauNumerator {
    /// `f(uₙ)`, consistent with the `‖∇f(uₙ)‖²` denominator.
    #[default]
    Extrapolated,
    /// `f(xₙ)`
    Iterate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    Adaptive(TauNumerator),
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stopping {
    pub grad_tol: f64,
    pub residual_tol: f64,
    pub max_iter: usize,
}

impl Default for Stopping {
    fn default() -> Self {
        Self {
            grad_tol: 1e-12,
            residual_tol: 1e-9,
            max_iter: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub variant: Variant,
    pub mode: CompositionMode,
    pub step: StepSize,
    pub stopping: Stopping,
    /// `‖∇f(uₙ)‖²` at or below this drops the gradient term for the step.
    pub guard: f64,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Algorithm1,
            mode: CompositionMode::Proof,
            step: StepSize::Adaptive(TauNumerator::Extrapolated),
            stopping: Stopping::default(),
            guard: 1e-24,
        }
    }
}

impl StepperConfig {
    pub fn algorithm1(mode: CompositionMode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_stopping(mut self, stopping: Stopping) -> Self {
        self.stopping = stopping;
        self
    }
}

/// Per-step diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub n: usize,
    pub params: StepParams,
    pub theta_n: f64,
    /// `θₙ‖xₙ − xₙ₋₁‖`, bounded by `εₙ`.
    pub inertial_size: f64,
    pub tau_n: f64,
    /// `f(uₙ)`
    pub f_u: f64,
    /// `‖∇f(uₙ)‖`
    pub grad_norm_u: f64,
    /// `‖xₙ − P_C xₙ‖`
    pub res_c: f64,
    /// `‖Auₙ − P_Q Auₙ‖`
    pub res_q: f64,
    /// `‖S_λ xₙ₊₁ − xₙ₊₁‖`, zero when there is no fixed-point constraint.
    pub res_fix_next: f64,
    /// `‖yₙ − x*‖ − ‖uₙ − x*‖` when a solution is known.
    pub fejer_y: Option<f64>,
    /// `‖vₙ − x*‖ − ‖uₙ − x*‖` when a solution is known and `αₙ < 1`.
    pub fejer_v: Option<f64>,
    /// Whether `‖S_λuₙ − x*‖ ≤ ‖uₙ − x*‖` held at this step.
    pub averaged_qne_ok: Option<bool>,
    /// `‖xₙ₊₁ − (αₙg(xₙ) + (1 − αₙ)vₙ)‖`, zero up to rounding.
    pub combination_gap: Option<f64>,
    pub psi: f64,
}

/// Result of a single step together with its intermediate points.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub x_next: Vector,
    pub u: Vector,
    pub y: Vector,
    pub v: Option<Vector>,
    pub record: StepRecord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Gradient and residual tolerances met at the newest iterate.
    ResidualMet,
    /// `∇f(uₙ) = 0` exactly and the iterate stopped moving.
    GradZero,
    MaxIter,
}

impl Termination {
    pub fn name(&self) -> &'static str {
        match self {
            Self::ResidualMet => "residual_met",
            Self::GradZero => "grad_zero",
            Self::MaxIter => "max_iter",
        }
    }
}

/// Trajectory of a run. `iterates[0]` is the start point `x₁` and
/// `iterates[k]` the point produced by step `k`, so there is one more
/// iterate than there are records.
#[derive(Debug, Clone, PartialEq)]
pub struct RunHistory {
    pub iterates: Vec<Vector>,
    pub records: Vec<StepRecord>,
    pub termination: Termination,
    pub warnings: Vec<String>,
}

impl RunHistory {
    pub fn steps(&self) -> usize {
        self.records.len()
    }

    pub fn final_iterate(&self) -> &Vector {
        self.iterates.last().expect("history holds the start point")
    }

    /// First step index whose iterate is within `tol` of `target` in the
    /// max norm.
    pub fn first_within(&self, target: &Vector, tol: f64) -> Option<usize> {
        self.iterates
            .iter()
            .position(|x| (x - target).norm_inf() <= tol)
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Input(#[from] Error),
    #[error("iterates diverged at step {step} (norm {norm:e})")]
    Diverged {
        step: usize,
        norm: f64,
        history: Box<RunHistory>,
    },
}

/// Effective parameters of one step after the variant's overrides.
struct Effective {
    params: StepParams,
    theta: f64,
    mode: CompositionMode,
    step: StepSize,
}

/// Holds what stays fixed across steps: the problem, the schedule, the
/// configuration and the averaged mapping `S_λ`.
pub struct Stepper<'a> {
    problem: &'a SfpProblem,
    schedule: &'a ParameterSchedule,
    config: StepperConfig,
    averaged: Option<AveragedMapping>,
    warnings: Vec<String>,
}

impl<'a> Stepper<'a> {
    pub fn new(
        problem: &'a SfpProblem,
        schedule: &'a ParameterSchedule,
        config: StepperConfig,
    ) -> Result<Self> {
        schedule.check_form()?;
        let mut warnings = Vec::new();
        let lambda = match config.variant {
            Variant::Viscosity => 1.0,
            _ => schedule.lambda,
        };
        let averaged = problem.s().map(|s| average(s, lambda)).transpose()?;
        if let Some(s) = problem.s() {
            if let MappingClass::Demicontractive(k) = s.class() {
                if lambda >= 1.0 - k {
                    warnings.push(format!(
                        "lambda = {lambda} is not below 1 - k = {} for the declared {k}-demicontractive S; \
                         S_lambda need not be quasi-nonexpansive",
                        1.0 - k
                    ));
                }
            }
        }
        match config.variant {
            Variant::CqFixedStep { step } => {
                let norm = problem.a().operator_norm(1e-12, 10_000)?;
                let bound = 2.0 / (norm * norm);
                if !(step > 0.0 && step < bound) {
                    return Err(Error::InvalidInput(format!(
                        "fixed CQ step {step} outside (0, 2/||A||^2) = (0, {bound})"
                    )));
                }
            }
            _ => {
                if let StepSize::Fixed(step) = config.step {
                    if !(step >= 0.0 && step.is_finite()) {
                        return Err(Error::InvalidInput(format!("fixed step {step} must be >= 0")));
                    }
                }
            }
        }
        if !(config.guard > 0.0) {
            return Err(Error::InvalidInput("division guard must be > 0".into()));
        }
        Ok(Self {
            problem,
            schedule,
            config,
            averaged,
            warnings,
        })
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    fn effective(&self, n: usize) -> Result<Effective> {
        let mut params = self.schedule.at(n)?;
        let mut theta = self.schedule.theta;
        let mut mode = self.config.mode;
        let mut step = self.config.step;
        match self.config.variant {
            Variant::CqFixedStep { .. } | Variant::CqAdaptive => {
                params.alpha = 0.0;
                params.beta = 0.0;
                params.gamma = 1.0;
                params.delta = 0.0;
                theta = 0.0;
                step = match self.config.variant {
                    Variant::CqFixedStep { step } => StepSize::Fixed(step),
                    _ => StepSize::Adaptive(TauNumerator::Extrapolated),
                };
            }
            Variant::Viscosity => {
                theta = 0.0;
                mode = CompositionMode::Statement;
            }
            Variant::Algorithm1 => {}
        }
        params.check_hard(matches!(step, StepSize::Adaptive(_)))?;
        Ok(Effective {
            params,
            theta,
            mode,
            step,
        })
    }

    fn apply_averaged(&self, x: &Vector) -> Vector {
        match &self.averaged {
            Some(t) => t.eval(x),
            None => x.clone(),
        }
    }

    /// One step from `(xₙ, xₙ₋₁)`.
    pub fn step(&self, n: usize, x_n: &Vector, x_prev: &Vector) -> Result<StepOutcome> {
        let dim = self.problem.dim();
        check_dim("x_n", dim, x_n.dim())?;
        check_dim("x_prev", dim, x_prev.dim())?;
        let Effective {
            params,
            theta,
            mode,
            step,
        } = self.effective(n)?;
        let p = self.problem;
        let guard = self.config.guard;

        let theta_n = inertial_theta(theta, params.epsilon, x_n, x_prev);
        let inertial_size = theta_n * x_n.distance(x_prev);
        let u = if theta_n == 0.0 {
            x_n.clone()
        } else {
            Vector::lincomb(1.0 + theta_n, x_n, -theta_n, x_prev)
        };

        let r = p.range_residual(&u);
        let f_u = 0.5 * r.norm_squared();
        let grad = p.a().apply_adjoint_unchecked(&r);
        let grad_sq = grad.norm_squared();
        let tau_n = match step {
            StepSize::Fixed(t) => t,
            StepSize::Adaptive(num) => {
                let numerator = match num {
                    TauNumerator::Extrapolated => f_u,
                    TauNumerator::Iterate => 0.5 * p.range_residual(x_n).norm_squared(),
                };
                tau_from(params.rho, numerator, grad_sq, guard)
            }
        };

        let tu = self.apply_averaged(&u);
        let delta = params.delta;
        let descent = Vector::lincomb(1.0, &u, -tau_n, &grad);
        let blended = Vector::lincomb(1.0 - delta, &descent, delta, &tu);
        let y = match mode {
            CompositionMode::Proof => p.c().project_unchecked(&blended),
            CompositionMode::Statement => {
                let inner = Vector::lincomb(1.0 - delta, &u, -tau_n, &grad);
                Vector::lincomb(1.0, &p.c().project_unchecked(&inner), delta, &tu)
            }
            CompositionMode::Explore => {
                let averaged_u = Vector::lincomb(1.0 - delta, &u, delta, &tu);
                p.c()
                    .project_unchecked(&Vector::lincomb(1.0, &averaged_u, -tau_n, &grad))
            }
        };

        let gx = p.g().eval(x_n);
        let x_next = &Vector::lincomb(params.alpha, &gx, params.beta, &u) + &y.scale(params.gamma);

        let one_minus_alpha = 1.0 - params.alpha;
        let v = (one_minus_alpha > 0.0).then(|| {
            Vector::lincomb(
                params.beta / one_minus_alpha,
                &u,
                params.gamma / one_minus_alpha,
                &y,
            )
        });
        let combination_gap = v.as_ref().map(|v| {
            x_next.distance(&Vector::lincomb(params.alpha, &gx, one_minus_alpha, v))
        });

        let (fejer_y, fejer_v, averaged_qne_ok) = match p.known_solution() {
            Some(xs) => {
                let du = u.distance(xs);
                (
                    Some(y.distance(xs) - du),
                    v.as_ref().map(|v| v.distance(xs) - du),
                    Some(tu.distance(xs) <= du + MONITOR_TOL),
                )
            }
            None => (None, None, None),
        };

        let psi = {
            let w = if one_minus_alpha > 0.0 {
                params.gamma / one_minus_alpha
            } else {
                0.0
            };
            let ratio = if grad_sq > guard { f_u * f_u / grad_sq } else { 0.0 };
            let rho = params.rho;
            let drift = &Vector::lincomb(1.0, &tu, -1.0, &u) + &grad.scale(tau_n);
            let outside = blended.distance(&p.c().project_unchecked(&blended));
            (1.0 - delta) * w * rho * (4.0 - rho) * ratio
                + delta * (1.0 - delta) * w * drift.norm_squared()
                + w * outside * outside
        };

        let res_fix_next = match &self.averaged {
            Some(t) => t.eval(&x_next).distance(&x_next),
            None => 0.0,
        };

        let record = StepRecord {
            n,
            params,
            theta_n,
            inertial_size,
            tau_n,
            f_u,
            grad_norm_u: grad_sq.sqrt(),
            res_c: x_n.distance(&p.c().project_unchecked(x_n)),
            res_q: r.norm(),
            res_fix_next,
            fejer_y,
            fejer_v,
            averaged_qne_ok,
            combination_gap,
            psi,
        };
        Ok(StepOutcome {
            x_next,
            u,
            y,
            v,
            record,
        })
    }

    /// `max(‖x − P_C x‖, ‖Ax − P_Q Ax‖, ‖S_λx − x‖)`.
    pub fn combined_residual(&self, x: &Vector) -> f64 {
        let p = self.problem;
        let res_c = x.distance(&p.c().project_unchecked(x));
        let res_q = p.range_residual(x).norm();
        let res_fix = match &self.averaged {
            Some(t) => t.eval(x).distance(x),
            None => 0.0,
        };
        res_c.max(res_q).max(res_fix)
    }
}

/// One step of the general iteration; see [`Stepper::step`].
pub fn step_algorithm1(
    problem: &SfpProblem,
    schedule: &ParameterSchedule,
    config: &StepperConfig,
    n: usize,
    x_n: &Vector,
    x_prev: &Vector,
) -> Result<StepOutcome> {
    Stepper::new(problem, schedule, *config)?.step(n, x_n, x_prev)
}

/// Iterates until `‖∇f(uₙ)‖ ≤ grad_tol` and the combined residual of the
/// new iterate is at most `residual_tol`, or until `max_iter` steps.
pub fn run(
    problem: &SfpProblem,
    schedule: &ParameterSchedule,
    config: &StepperConfig,
    x0: &Vector,
    x1: &Vector,
) -> std::result::Result<RunHistory, RunError> {
    let stop = config.stopping;
    if !(stop.grad_tol > 0.0 && stop.residual_tol > 0.0) || stop.max_iter == 0 {
        return Err(Error::InvalidInput(format!(
            "stopping rule needs positive tolerances and max_iter >= 1, got {stop:?}"
        ))
        .into());
    }
    check_dim("x0", problem.dim(), x0.dim())?;
    check_dim("x1", problem.dim(), x1.dim())?;
    let stepper = Stepper::new(problem, schedule, *config)?;
    let mut history = RunHistory {
        iterates: vec![x1.clone()],
        records: Vec::new(),
        termination: Termination::MaxIter,
        warnings: stepper.warnings().to_vec(),
    };
    let mut prev = x0.clone();
    let mut cur = x1.clone();
    for n in 1..=stop.max_iter {
        let outcome = stepper.step(n, &cur, &prev)?;
        let next = outcome.x_next;
        let norm = next.norm();
        let record = outcome.record;
        let grad_norm = record.grad_norm_u;
        history.records.push(record);
        history.iterates.push(next.clone());
        if !next.is_finite() || norm > DIVERGENCE_NORM {
            return Err(RunError::Diverged {
                step: n,
                norm,
                history: Box::new(history),
            });
        }
        if grad_norm <= stop.grad_tol && stepper.combined_residual(&next) <= stop.residual_tol {
            history.termination = Termination::ResidualMet;
            break;
        }
        if grad_norm == 0.0 && next == cur {
            history.termination = Termination::GradZero;
            break;
        }
        prev = std::mem::replace(&mut cur, next);
    }
    Ok(history)
}

/// The nonnegative progress term of the averaged iteration's energy
/// estimate, evaluated at `uₙ` with step `τₙ`:
///
/// `(1−δ)(γ/(1−α))ρ(4−ρ) f²(u)/‖∇f(u)‖² + δ(1−δ)(γ/(1−α))‖S_λu − u + τ∇f(u)‖²
///  + (γ/(1−α))‖(I − P_C)((1−δ)(u − τ∇f(u)) + δS_λu)‖²`
pub fn psi_diagnostic(
    problem: &SfpProblem,
    schedule: &ParameterSchedule,
    n: usize,
    u: &Vector,
    tau: f64,
) -> Result<f64> {
    let config = StepperConfig {
        step: StepSize::Fixed(tau),
        ..StepperConfig::default()
    };
    let stepper = Stepper::new(problem, schedule, config)?;
    // the step's psi only depends on uₙ; θ = 0 with xₙ = xₙ₋₁ = u gives uₙ = u
    let no_inertia = ParameterSchedule {
        theta: 0.0,
        ..schedule.clone()
    };
    let stepper = Stepper {
        schedule: &no_inertia,
        ..stepper
    };
    Ok(stepper.step(n, u, u)?.record.psi)
}
