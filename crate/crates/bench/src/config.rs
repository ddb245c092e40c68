//! TOML problem configs.
//!
//! A config names a problem (the built-in linear-system instance, a seeded
//! random instance, or explicit data), a schedule (a preset plus optional
//! per-sequence overrides), the stepper settings, start vectors and output
//! paths. Every optional setting has a concrete default, so parsing then
//! serializing yields a canonical document whose hash fingerprints the run.
//!
//! ```toml
//! [problem]
//! source = "example-s4"
//!
//! [schedule]
//! preset = "paper-s4"
//! delta = { rule = "constant", value = 0.25 }
//!
//! [stepper]
//! variant = "algorithm1"
//! mode = "proof"
//! ```

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use sfp_core::mappings::MappingClass;
use sfp_core::solver::{
    CompositionMode, ParameterSchedule, Sequence, StepSize, StepperConfig, Stopping, TauNumerator,
    Variant,
};
use sfp_core::{BoundedLinearMap, ConvexSet, MappingSpec, SfpProblem, Vector};

use crate::problems::{build_example_s4, generate_random_sfp, SetFamily};

/// A config error pinned to the field it came from.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn at(path: impl Into<String>, message: impl ToString) -> Self {
        Self {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

type ConfigResult<T> = Result<T, ConfigError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub problem: ProblemDef,
    #[serde(default)]
    pub schedule: ScheduleDef,
    #[serde(default)]
    pub stepper: StepperDef,
    #[serde(default)]
    pub start: StartDef,
    #[serde(default)]
    pub output: OutputDef,
}

fn default_name() -> String {
    "experiment".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemDef {
    ExampleS4,
    Random {
        dim1: usize,
        dim2: usize,
        family: String,
        seed: u64,
    },
    Explicit {
        /// Row-major matrix of the linear map.
        a: Vec<Vec<f64>>,
        c: SetDef,
        q: SetDef,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        s: Option<MappingDef>,
        #[serde(default = "default_g")]
        g: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        known_solution: Option<Vec<f64>>,
    },
}

fn default_g() -> String {
    "zero".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetDef {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Halfspace { normal: Vec<f64>, offset: f64 },
    Hyperplane { normal: Vec<f64>, offset: f64 },
    Singleton { point: Vec<f64> },
    /// `{x : Mx = 0}`
    AffineNullspace { matrix: Vec<Vec<f64>> },
    /// Fixed points of a square matrix `M`, i.e. `null(I − M)`.
    FixedPoints { matrix: Vec<Vec<f64>> },
    WholeSpace { dim: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MappingDef {
    /// `identity`, `zero`, `example-2.2`, `linear:<matrix>` or
    /// `contraction-scale:<c>`.
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulus: Option<f64>,
    #[serde(default)]
    pub demiclosed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SequenceDef {
    Constant { value: f64 },
    Reciprocal { scale: f64, power: f64 },
    Explicit { values: Vec<f64> },
    Complement { share: f64 },
    Remainder,
}

impl From<SequenceDef> for Sequence {
    fn from(def: SequenceDef) -> Self {
        match def {
            SequenceDef::Constant { value } => Sequence::Constant(value),
            SequenceDef::Reciprocal { scale, power } => Sequence::Reciprocal { scale, power },
            SequenceDef::Explicit { values } => Sequence::Explicit(values),
            SequenceDef::Complement { share } => Sequence::Complement { share },
            SequenceDef::Remainder => Sequence::Remainder,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleDef {
    #[serde(default = "default_preset")]
    pub preset: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<SequenceDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<SequenceDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<SequenceDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<SequenceDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<SequenceDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<SequenceDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

fn default_preset() -> String {
    "paper-s4".into()
}

impl Default for ScheduleDef {
    fn default() -> Self {
        Self {
            preset: default_preset(),
            alpha: None,
            beta: None,
            gamma: None,
            delta: None,
            rho: None,
            epsilon: None,
            theta: None,
            lambda: None,
        }
    }
}

impl ScheduleDef {
    pub fn preset(name: &str) -> Self {
        Self {
            preset: name.into(),
            ..Self::default()
        }
    }

    pub fn build(&self) -> ConfigResult<ParameterSchedule> {
        let mut s = ParameterSchedule::preset(&self.preset)
            .map_err(|e| ConfigError::at("schedule.preset", e))?;
        let set = |slot: &mut Sequence, def: &Option<SequenceDef>| {
            if let Some(def) = def {
                *slot = def.clone().into();
            }
        };
        set(&mut s.alpha, &self.alpha);
        set(&mut s.beta, &self.beta);
        set(&mut s.gamma, &self.gamma);
        set(&mut s.delta, &self.delta);
        set(&mut s.rho, &self.rho);
        set(&mut s.epsilon, &self.epsilon);
        if let Some(theta) = self.theta {
            s.theta = theta;
        }
        if let Some(lambda) = self.lambda {
            s.lambda = lambda;
        }
        s.check_form().map_err(|e| ConfigError::at("schedule", e))?;
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepperDef {
    /// `algorithm1`, `viscosity`, `cq-adaptive` or `cq-fixed-step`.
    #[serde(default = "default_variant")]
    pub variant: String,
    /// `proof`, `statement` or `explore`.
    #[serde(default = "default_mode")]
    pub mode: String,
    /// Fixed step; required by `cq-fixed-step`, replaces the adaptive step
    /// for the other variants when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    /// `extrapolated` (`f(uₙ)`) or `iterate` (`f(xₙ)`).
    #[serde(default = "default_numerator")]
    pub tau_numerator: String,
    #[serde(default = "default_grad_tol")]
    pub grad_tol: f64,
    #[serde(default = "default_residual_tol")]
    pub residual_tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_variant() -> String {
    "algorithm1".into()
}
fn default_mode() -> String {
    "proof".into()
}
fn default_numerator() -> String {
    "extrapolated".into()
}
fn default_grad_tol() -> f64 {
    Stopping::default().grad_tol
}
fn default_residual_tol() -> f64 {
    Stopping::default().residual_tol
}
fn default_max_iter() -> usize {
    Stopping::default().max_iter
}

impl Default for StepperDef {
    fn default() -> Self {
        Self {
            variant: default_variant(),
            mode: default_mode(),
            step: None,
            tau_numerator: default_numerator(),
            grad_tol: default_grad_tol(),
            residual_tol: default_residual_tol(),
            max_iter: default_max_iter(),
        }
    }
}

impl StepperDef {
    pub fn build(&self) -> ConfigResult<StepperConfig> {
        let variant = match self.variant.as_str() {
            "algorithm1" => Variant::Algorithm1,
            "viscosity" => Variant::Viscosity,
            "cq-adaptive" => Variant::CqAdaptive,
            "cq-fixed-step" => Variant::CqFixedStep {
                step: self.step.ok_or_else(|| {
                    ConfigError::at("stepper.step", "cq-fixed-step requires a step")
                })?,
            },
            other => {
                return Err(ConfigError::at(
                    "stepper.variant",
                    format!("unknown variant {other:?}"),
                ))
            }
        };
        let mode = CompositionMode::from_name(&self.mode)
            .map_err(|e| ConfigError::at("stepper.mode", e))?;
        let numerator = match self.tau_numerator.as_str() {
            "extrapolated" => TauNumerator::Extrapolated,
            "iterate" => TauNumerator::Iterate,
            other => {
                return Err(ConfigError::at(
                    "stepper.tau_numerator",
                    format!("unknown numerator {other:?}"),
                ))
            }
        };
        let step = match self.step {
            Some(t) => StepSize::Fixed(t),
            None => StepSize::Adaptive(numerator),
        };
        if !(self.grad_tol > 0.0) {
            return Err(ConfigError::at("stepper.grad_tol", "must be > 0"));
        }
        if !(self.residual_tol > 0.0) {
            return Err(ConfigError::at("stepper.residual_tol", "must be > 0"));
        }
        if self.max_iter == 0 {
            return Err(ConfigError::at("stepper.max_iter", "must be >= 1"));
        }
        Ok(StepperConfig {
            variant,
            mode,
            step,
            stopping: Stopping {
                grad_tol: self.grad_tol,
                residual_tol: self.residual_tol,
                max_iter: self.max_iter,
            },
            ..StepperConfig::default()
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartDef {
    /// Defaults to the all-ones vector.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x1: Option<Vec<f64>>,
    /// Defaults to `x1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputDef {
    /// CSV trajectory path, relative to the output directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    /// SVG convergence plot path, relative to the output directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svg: Option<String>,
}

/// A config resolved into solver inputs.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub problem: SfpProblem,
    pub schedule: ParameterSchedule,
    pub stepper: StepperConfig,
    pub x0: Vector,
    pub x1: Vector,
}

impl ProblemConfig {
    /// The built-in linear-system instance with a schedule preset and mode.
    pub fn example_s4(preset: &str, mode: CompositionMode) -> Self {
        Self {
            name: format!("example-s4-{preset}-{}", mode.name()),
            problem: ProblemDef::ExampleS4,
            schedule: ScheduleDef::preset(preset),
            stepper: StepperDef {
                mode: mode.name().into(),
                ..StepperDef::default()
            },
            start: StartDef::default(),
            output: OutputDef::default(),
        }
    }

    pub fn parse(text: &str) -> ConfigResult<Self> {
        toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            let location = e
                .span()
                .map(|s| {
                    let line = text[..s.start].matches('\n').count() + 1;
                    format!("line {line}")
                })
                .unwrap_or_else(|| "document".into());
            ConfigError::at(location, message)
        })
    }

    /// Canonical serialization: every default filled in, fixed key order.
    pub fn to_canonical(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    /// Hex SHA-256 of the canonical serialization.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn resolve(&self) -> ConfigResult<Resolved> {
        let problem = self.problem.build()?;
        let schedule = self.schedule.build()?;
        let stepper = self.stepper.build()?;
        let dim = problem.dim();
        let x1 = match &self.start.x1 {
            Some(v) => vector_at("start.x1", v, dim)?,
            None => Vector::filled(dim, 1.0),
        };
        let x0 = match &self.start.x0 {
            Some(v) => vector_at("start.x0", v, dim)?,
            None => x1.clone(),
        };
        Ok(Resolved {
            problem,
            schedule,
            stepper,
            x0,
            x1,
        })
    }
}

fn vector_at(path: &str, values: &[f64], dim: usize) -> ConfigResult<Vector> {
    let v = Vector::from_slice(values).map_err(|e| ConfigError::at(path, e))?;
    if v.dim() != dim {
        return Err(ConfigError::at(
            path,
            format!("expected {dim} entries, found {}", v.dim()),
        ));
    }
    Ok(v)
}

fn matrix_at(path: &str, rows: &[Vec<f64>]) -> ConfigResult<BoundedLinearMap> {
    BoundedLinearMap::from_rows(rows).map_err(|e| ConfigError::at(path, e))
}

impl SetDef {
    pub fn build(&self, path: &str) -> ConfigResult<ConvexSet> {
        let err = |e: sfp_core::Error| ConfigError::at(path, e);
        let vec = |field: &str, v: &[f64]| {
            Vector::from_slice(v).map_err(|e| ConfigError::at(format!("{path}.{field}"), e))
        };
        match self {
            SetDef::Box { lower, upper } => {
                ConvexSet::boxed(vec("lower", lower)?, vec("upper", upper)?).map_err(err)
            }
            SetDef::Ball { center, radius } => {
                ConvexSet::ball(vec("center", center)?, *radius).map_err(err)
            }
            SetDef::Halfspace { normal, offset } => {
                ConvexSet::halfspace(vec("normal", normal)?, *offset).map_err(err)
            }
            SetDef::Hyperplane { normal, offset } => {
                ConvexSet::hyperplane(vec("normal", normal)?, *offset).map_err(err)
            }
            SetDef::Singleton { point } => Ok(ConvexSet::singleton(vec("point", point)?)),
            SetDef::AffineNullspace { matrix } => Ok(ConvexSet::affine_nullspace(matrix_at(
                &format!("{path}.matrix"),
                matrix,
            )?)),
            SetDef::FixedPoints { matrix } => {
                let m = matrix_at(&format!("{path}.matrix"), matrix)?;
                Ok(ConvexSet::affine_nullspace(m.identity_minus().map_err(err)?))
            }
            SetDef::WholeSpace { dim } if *dim >= 1 => Ok(ConvexSet::whole_space(*dim)),
            SetDef::WholeSpace { .. } => Err(ConfigError::at(
                format!("{path}.dim"),
                "dimension must be >= 1",
            )),
        }
    }
}

fn parse_class(path: &str, name: &str, modulus: Option<f64>) -> ConfigResult<MappingClass> {
    let need = |m: Option<f64>| {
        m.ok_or_else(|| ConfigError::at(format!("{path}.modulus"), format!("class {name} needs a modulus")))
    };
    Ok(match name {
        "contraction" => MappingClass::Contraction(need(modulus)?),
        "nonexpansive" => MappingClass::Nonexpansive,
        "quasi_nonexpansive" => MappingClass::QuasiNonexpansive,
        "strictly_pseudocontractive" => MappingClass::StrictlyPseudocontractive(need(modulus)?),
        "demicontractive" => MappingClass::Demicontractive(need(modulus)?),
        "generic" => MappingClass::Generic,
        other => {
            return Err(ConfigError::at(
                format!("{path}.class"),
                format!("unknown class {other:?}"),
            ))
        }
    })
}

impl MappingDef {
    pub fn build(&self, path: &str, dim: usize) -> ConfigResult<MappingSpec> {
        let mut spec = MappingSpec::from_name(&self.name, dim)
            .map_err(|e| ConfigError::at(format!("{path}.name"), e))?;
        if let Some(class) = &self.class {
            spec = spec
                .with_class(parse_class(path, class, self.modulus)?)
                .map_err(|e| ConfigError::at(format!("{path}.modulus"), e))?;
        }
        Ok(spec.with_demiclosed_assumption(self.demiclosed))
    }
}

impl ProblemDef {
    pub fn build(&self) -> ConfigResult<SfpProblem> {
        match self {
            ProblemDef::ExampleS4 => Ok(build_example_s4()),
            ProblemDef::Random {
                dim1,
                dim2,
                family,
                seed,
            } => {
                let fam = SetFamily::from_name(family).ok_or_else(|| {
                    ConfigError::at(
                        "problem.family",
                        format!("unknown family {family:?} (expected box, ball or halfspace)"),
                    )
                })?;
                generate_random_sfp(*dim1, *dim2, fam, *seed)
                    .map_err(|e| ConfigError::at("problem", e))
            }
            ProblemDef::Explicit {
                a,
                c,
                q,
                s,
                g,
                known_solution,
            } => {
                let a = matrix_at("problem.a", a)?;
                let c = c.build("problem.c")?;
                let q = q.build("problem.q")?;
                let s = s
                    .as_ref()
                    .map(|s| s.build("problem.s", a.cols()))
                    .transpose()?;
                let g = MappingSpec::from_name(g, a.cols())
                    .map_err(|e| ConfigError::at("problem.g", e))?;
                let mut problem =
                    SfpProblem::new(a, c, q, s, g).map_err(|e| ConfigError::at("problem", e))?;
                if let Some(x) = known_solution {
                    let x = vector_at("problem.known_solution", x, problem.dim())?;
                    problem = problem
                        .with_known_solution(x)
                        .map_err(|e| ConfigError::at("problem.known_solution", e))?;
                }
                Ok(problem)
            }
        }
    }
}
