//! Parameter sequences for the inertial iteration and finite-horizon checks
//! of the conditions they are meant to satisfy.

use std::fmt;

use crate::error::{Error, Result};

/// Tolerance on `αₙ + βₙ + γₙ = 1`.
pub const SUM_TOL: f64 = 1e-12;

/// A real sequence indexed from `n = 1`.
#[derive(Debug, Clone, PartialEq)]
pub enum Sequence {
    Constant(f64),
    /// `scale / n^power`
    Reciprocal { scale: f64, power: f64 },
    /// Listed values for `n = 1, 2, ...`; the last value is held past the end.
    Explicit(Vec<f64>),
    /// `share · (1 − αₙ)`. Only valid for β and γ.
    Complement { share: f64 },
    /// `1 − αₙ − βₙ`. Only valid for γ.
    Remainder,
}

impl Sequence {
    fn base_value(&self, n: usize) -> Option<f64> {
        match self {
            Self::Constant(c) => Some(*c),
            Self::Reciprocal { scale, power } => Some(scale / (n as f64).powf(*power)),
            Self::Explicit(values) => values.get(n - 1).or(values.last()).copied(),
            Self::Complement { .. } | Self::Remainder => None,
        }
    }

    fn check_form(&self, name: &str, allow_complement: bool, allow_remainder: bool) -> Result<()> {
        let malformed = |msg: String| Err(Error::InvalidInput(format!("sequence {name}: {msg}")));
        match self {
            Self::Constant(c) if !c.is_finite() => malformed(format!("non-finite constant {c}")),
            Self::Reciprocal { scale, power } if !(scale.is_finite() && power.is_finite()) => {
                malformed("non-finite reciprocal parameters".into())
            }
            Self::Explicit(values) if values.is_empty() => malformed("empty explicit list".into()),
            Self::Explicit(values) if values.iter().any(|v| !v.is_finite()) => {
                malformed("non-finite entry in explicit list".into())
            }
            Self::Complement { .. } if !allow_complement => {
                malformed("complement rule is only defined for beta and gamma".into())
            }
            Self::Complement { share } if !share.is_finite() => malformed("non-finite share".into()),
            Self::Remainder if !allow_remainder => {
                malformed("remainder rule is only defined for gamma".into())
            }
            _ => Ok(()),
        }
    }
}

/// Parameter values in force at step `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepParams {
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub rho: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSchedule {
    pub alpha: Sequence,
    pub beta: Sequence,
    pub gamma: Sequence,
    pub delta: Sequence,
    pub rho: Sequence,
    pub epsilon: Sequence,
    /// Upper bound on the inertial weight.
    pub theta: f64,
    /// Averaging parameter of `S_λ`.
    pub lambda: f64,
}

impl ParameterSchedule {
    /// `αₙ = 1/(10n)`, `βₙ = γₙ = (1 − αₙ)/2`, `δₙ = 0.5`, `ρₙ = 2`,
    /// `εₙ = αₙ/n`, `θ = 0.5`, `λ = 0.5`.
    pub fn paper_s4() -> Self {
        Self {
            alpha: Sequence::Reciprocal { scale: 0.1, power: 1.0 },
            beta: Sequence::Complement { share: 0.5 },
            gamma: Sequence::Remainder,
            delta: Sequence::Constant(0.5),
            rho: Sequence::Constant(2.0),
            epsilon: Sequence::Reciprocal { scale: 0.1, power: 2.0 },
            theta: 0.5,
            lambda: 0.5,
        }
    }

    /// The settings reported next to the linear-system table: `βₙ = 0`,
    /// `δₙ = 1`, `θ = 0`, `λ = 0.5`, with `αₙ = 1/(10n)` kept.
    pub fn table_1() -> Self {
        Self {
            beta: Sequence::Constant(0.0),
            gamma: Sequence::Remainder,
            delta: Sequence::Constant(1.0),
            epsilon: Sequence::Constant(0.0),
            theta: 0.0,
            ..Self::paper_s4()
        }
    }

    /// Plain projected-gradient weights: `α = β = δ = 0`, `γ = 1`, no inertia.
    pub fn cq() -> Self {
        Self {
            alpha: Sequence::Constant(0.0),
            beta: Sequence::Constant(0.0),
            gamma: Sequence::Constant(1.0),
            delta: Sequence::Constant(0.0),
            rho: Sequence::Constant(2.0),
            epsilon: Sequence::Constant(0.0),
            theta: 0.0,
            lambda: 1.0,
        }
    }

    /// Inertial averaged iteration without anchoring: `αₙ = 0`,
    /// `βₙ = γₙ = 0.5`, `δₙ = 0.5`, `ρₙ = 2`, `εₙ = 1/n²`, `θ = 0.5`,
    /// `λ = 0.5`. Drops the `Σαₙ = ∞` condition so the iteration is not
    /// pulled towards `g`.
    pub fn unanchored() -> Self {
        Self {
            alpha: Sequence::Constant(0.0),
            beta: Sequence::Constant(0.5),
            gamma: Sequence::Remainder,
            delta: Sequence::Constant(0.5),
            rho: Sequence::Constant(2.0),
            epsilon: Sequence::Reciprocal { scale: 1.0, power: 2.0 },
            theta: 0.5,
            lambda: 0.5,
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "paper-s4" => Ok(Self::paper_s4()),
            "table-1" => Ok(Self::table_1()),
            "cq" => Ok(Self::cq()),
            "unanchored" => Ok(Self::unanchored()),
            _ => Err(Error::InvalidInput(format!(
                "unknown schedule preset {name:?} (expected paper-s4, table-1, cq or unanchored)"
            ))),
        }
    }

    pub const PRESETS: [&'static str; 4] = ["paper-s4", "table-1", "cq", "unanchored"];

    /// Rejects sequences that cannot be evaluated at all.
    pub fn check_form(&self) -> Result<()> {
        self.alpha.check_form("alpha", false, false)?;
        self.beta.check_form("beta", true, false)?;
        self.gamma.check_form("gamma", true, true)?;
        self.delta.check_form("delta", false, false)?;
        self.rho.check_form("rho", false, false)?;
        self.epsilon.check_form("epsilon", false, false)?;
        if !(self.theta >= 0.0 && self.theta.is_finite()) {
            return Err(Error::InvalidInput(format!("theta must be >= 0, got {}", self.theta)));
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "lambda must lie in (0, 1], got {}",
                self.lambda
            )));
        }
        Ok(())
    }

    /// Evaluates every sequence at `n ≥ 1`.
    pub fn at(&self, n: usize) -> Result<StepParams> {
        if n == 0 {
            return Err(Error::InvalidInput("sequences are indexed from n = 1".into()));
        }
        self.check_form()?;
        let base = |s: &Sequence| s.base_value(n).expect("form checked");
        let alpha = base(&self.alpha);
        let beta = match &self.beta {
            Sequence::Complement { share } => share * (1.0 - alpha),
            s => base(s),
        };
        let gamma = match &self.gamma {
            Sequence::Complement { share } => share * (1.0 - alpha),
            Sequence::Remainder => 1.0 - alpha - beta,
            s => base(s),
        };
        Ok(StepParams {
            n,
            alpha,
            beta,
            gamma,
            delta: base(&self.delta),
            rho: base(&self.rho),
            epsilon: base(&self.epsilon),
        })
    }
}

impl StepParams {
    /// Conditions every step must meet for the update to be well defined:
    /// weights in `[0, 1]` summing to one, `εₙ ≥ 0`, and `ρₙ ∈ (0, 4)` when
    /// the adaptive step is used. The open-interval requirements of the
    /// convergence theory are only warned about by [`validate_schedule`].
    pub fn check_hard(&self, adaptive: bool) -> Result<()> {
        let violation = |condition: String| Error::ScheduleViolation {
            n: self.n,
            condition,
        };
        for (name, value) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("delta", self.delta),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(violation(format!("{name} = {value} outside [0, 1]")));
            }
        }
        let sum = self.alpha + self.beta + self.gamma;
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(violation(format!("(c5) alpha + beta + gamma = {sum} != 1")));
        }
        if !(self.epsilon >= 0.0) {
            return Err(violation(format!("epsilon = {} is negative", self.epsilon)));
        }
        if adaptive && !(self.rho > 0.0 && self.rho < 4.0) {
            return Err(violation(format!("rho = {} outside (0, 4)", self.rho)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    /// Every weight in its open interval.
    Range,
    /// `lim sup βₙ < 1`
    C1,
    /// `εₙ/αₙ → 0`
    C2,
    /// `αₙ → 0`, `Σ αₙ = ∞`
    C3,
    /// `0 < lim inf δₙ ≤ lim sup δₙ < 1`
    C4,
    /// `αₙ + βₙ + γₙ = 1`
    C5,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Range => "range",
            Self::C1 => "c1",
            Self::C2 => "c2",
            Self::C3 => "c3",
            Self::C4 => "c4",
            Self::C5 => "c5",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Warn,
    Fail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionCheck {
    pub condition: Condition,
    pub status: Status,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub horizon: usize,
    pub checks: Vec<ConditionCheck>,
}

impl ValidationReport {
    pub fn status(&self, condition: Condition) -> Status {
        self.checks
            .iter()
            .find(|c| c.condition == condition)
            .map(|c| c.status)
            .expect("every condition is checked")
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.status == Status::Pass)
    }

    pub fn any_fail(&self) -> bool {
        self.checks.iter().any(|c| c.status == Status::Fail)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "schedule validation over n = 1..{}", self.horizon)?;
        for c in &self.checks {
            let tag = match c.status {
                Status::Pass => "PASS",
                Status::Warn => "WARN",
                Status::Fail => "FAIL",
            };
            writeln!(f, "  {tag} {:<5} {}", c.condition.to_string(), c.detail)?;
        }
        Ok(())
    }
}

/// Finite-horizon proxies for the limit conditions on the sequences.
///
/// Limits cannot be decided from finitely many terms, so the limit
/// conditions only ever pass or warn. `(c5)` is checked at every `n` and
/// fails outright when violated. `(c3)` is read as `Σ αₙ = +∞`.
pub fn validate_schedule(schedule: &ParameterSchedule, horizon: usize) -> Result<ValidationReport> {
    if horizon == 0 {
        return Err(Error::InvalidInput("horizon must be >= 1".into()));
    }
    schedule.check_form()?;
    let params = (1..=horizon)
        .map(|n| schedule.at(n))
        .collect::<Result<Vec<_>>>()?;
    let tail = &params[(horizon / 2).max(1) - 1..];
    let last = params[horizon - 1];
    let first = params[0];
    let mut checks = Vec::with_capacity(6);
    let mut push = |condition, ok: bool, fail: bool, detail: String| {
        let status = if ok {
            Status::Pass
        } else if fail {
            Status::Fail
        } else {
            Status::Warn
        };
        checks.push(ConditionCheck {
            condition,
            status,
            detail,
        });
    };

    let open01 = |v: f64| v > 0.0 && v < 1.0;
    let range_violation = params.iter().find_map(|p| {
        [
            ("alpha", p.alpha),
            ("beta", p.beta),
            ("gamma", p.gamma),
            ("delta", p.delta),
        ]
        .into_iter()
        .find(|(_, v)| !open01(*v))
        .map(|(name, v)| format!("{name}({}) = {v} not in (0, 1)", p.n))
        .or_else(|| (!(p.rho > 0.0 && p.rho < 4.0)).then(|| format!("rho({}) = {} not in (0, 4)", p.n, p.rho)))
        .or_else(|| (p.epsilon < 0.0).then(|| format!("epsilon({}) = {} negative", p.n, p.epsilon)))
    });
    push(
        Condition::Range,
        range_violation.is_none(),
        false,
        range_violation.unwrap_or_else(|| "all weights in their open intervals".into()),
    );

    let beta_sup = tail.iter().map(|p| p.beta).fold(f64::NEG_INFINITY, f64::max);
    push(
        Condition::C1,
        beta_sup < 1.0 - 1e-6,
        false,
        format!("max beta over tail = {beta_sup}"),
    );

    let ratio = |p: &StepParams| {
        if p.alpha > 0.0 {
            p.epsilon / p.alpha
        } else if p.epsilon == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    };
    let (r_first, r_last) = (ratio(&first), ratio(&last));
    let c2_ok = r_last < 1e-2 && (r_last < r_first || r_last == 0.0);
    push(
        Condition::C2,
        c2_ok,
        false,
        format!("epsilon/alpha: n=1 -> {r_first}, n={horizon} -> {r_last}"),
    );

    let tail_sum: f64 = tail.iter().map(|p| p.alpha).sum();
    let c3_ok = last.alpha <= 1e-2 && last.alpha * horizon as f64 >= 1e-3;
    push(
        Condition::C3,
        c3_ok,
        false,
        format!(
            "alpha({horizon}) = {}, horizon*alpha = {}, tail sum = {tail_sum}",
            last.alpha,
            last.alpha * horizon as f64
        ),
    );

    let d_lo = tail.iter().map(|p| p.delta).fold(f64::INFINITY, f64::min);
    let d_hi = tail.iter().map(|p| p.delta).fold(f64::NEG_INFINITY, f64::max);
    push(
        Condition::C4,
        d_lo >= 1e-6 && d_hi <= 1.0 - 1e-6,
        false,
        format!("delta over tail in [{d_lo}, {d_hi}]"),
    );

    let worst = params
        .iter()
        .map(|p| (p.n, (p.alpha + p.beta + p.gamma - 1.0).abs()))
        .fold((0, 0.0f64), |acc, x| if x.1 > acc.1 { x } else { acc });
    push(
        Condition::C5,
        worst.1 <= SUM_TOL,
        true,
        format!("max |alpha + beta + gamma - 1| = {:e} at n = {}", worst.1, worst.0.max(1)),
    );

    Ok(ValidationReport { horizon, checks })
}
