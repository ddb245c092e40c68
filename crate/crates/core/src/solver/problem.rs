use crate::error::{check_dim, Error, Result};
use crate::hilbert::{BoundedLinearMap, Vector};
use crate::mappings::{fixed_point_residual, MappingClass, MappingSpec, SelfMap};
use crate::sets::ConvexSet;

/// Residual allowed when checking a declared solution against the problem.
pub const KNOWN_SOLUTION_TOL: f64 = 1e-8;

/// Find `x ∈ C ∩ Fix(S)` with `Ax ∈ Q`.
///
/// `g` is the contraction blended in by viscosity-type iterations; with
/// `g ≡ 0` the iteration is anchored at the origin.
#[derive(Debug, Clone)]
pub struct SfpProblem {
    a: BoundedLinearMap,
    c: ConvexSet,
    q: ConvexSet,
    s: Option<MappingSpec>,
    g: MappingSpec,
    known_solution: Option<Vector>,
}

impl SfpProblem {
    pub fn new(
        a: BoundedLinearMap,
        c: ConvexSet,
        q: ConvexSet,
        s: Option<MappingSpec>,
        g: MappingSpec,
    ) -> Result<Self> {
        check_dim("C dimension vs columns of A", a.cols(), c.dim())?;
        check_dim("Q dimension vs rows of A", a.rows(), q.dim())?;
        if let Some(s) = &s {
            check_dim("S dimension", a.cols(), s.dim())?;
        }
        check_dim("g dimension", a.cols(), g.dim())?;
        if !matches!(g.class(), MappingClass::Contraction(_)) {
            return Err(Error::InvalidInput(format!(
                "g must be tagged as a contraction, got {:?}",
                g.class()
            )));
        }
        Ok(Self {
            a,
            c,
            q,
            s,
            g,
            known_solution: None,
        })
    }

    /// Attaches a point that is checked to solve the problem to within
    /// [`KNOWN_SOLUTION_TOL`].
    pub fn with_known_solution(mut self, x: Vector) -> Result<Self> {
        check_dim("known solution", self.dim(), x.dim())?;
        let res_c = self.c.membership_residual(&x)?;
        let res_q = self.q.membership_residual(&self.a.apply(&x)?)?;
        let res_s = match &self.s {
            Some(s) => fixed_point_residual(s, &x)?,
            None => 0.0,
        };
        let worst = res_c.max(res_q).max(res_s);
        if worst > KNOWN_SOLUTION_TOL {
            return Err(Error::InvalidInput(format!(
                "known solution does not solve the problem: res_C = {res_c:e}, res_Q = {res_q:e}, res_S = {res_s:e}"
            )));
        }
        self.known_solution = Some(x);
        Ok(self)
    }

    /// Dimension of the domain space.
    pub fn dim(&self) -> usize {
        self.a.cols()
    }

    pub fn a(&self) -> &BoundedLinearMap {
        &self.a
    }

    pub fn c(&self) -> &ConvexSet {
        &self.c
    }

    pub fn q(&self) -> &ConvexSet {
        &self.q
    }

    pub fn s(&self) -> Option<&MappingSpec> {
        self.s.as_ref()
    }

    pub fn g(&self) -> &MappingSpec {
        &self.g
    }

    pub fn known_solution(&self) -> Option<&Vector> {
        self.known_solution.as_ref()
    }

    /// `(I − P_Q)Ax`.
    pub(crate) fn range_residual(&self, x: &Vector) -> Vector {
        let ax = self.a.apply_unchecked(x);
        let p = self.q.project_unchecked(&ax);
        &ax - &p
    }
}

/// `f(x) = ½‖(I − P_Q)Ax‖²`.
pub fn f_value(problem: &SfpProblem, x: &Vector) -> Result<f64> {
    check_dim("f_value", problem.dim(), x.dim())?;
    Ok(0.5 * problem.range_residual(x).norm_squared())
}

/// `∇f(x) = A*(I − P_Q)Ax`.
pub fn grad_f(problem: &SfpProblem, x: &Vector) -> Result<Vector> {
    check_dim("grad_f", problem.dim(), x.dim())?;
    Ok(problem.a.apply_adjoint_unchecked(&problem.range_residual(x)))
}

/// Self-adaptive step `ρ f(u) / ‖∇f(u)‖²`, or `0` when `‖∇f(u)‖² ≤ guard`.
pub fn adaptive_tau(problem: &SfpProblem, u: &Vector, rho: f64, guard: f64) -> Result<f64> {
    let f = f_value(problem, u)?;
    let g2 = grad_f(problem, u)?.norm_squared();
    Ok(tau_from(rho, f, g2, guard))
}

pub(crate) fn tau_from(rho: f64, numerator: f64, grad_norm_sq: f64, guard: f64) -> f64 {
    if grad_norm_sq > guard {
        rho * numerator / grad_norm_sq
    } else {
        0.0
    }
}

/// Inertial weight `min(θ, εₙ/‖xₙ − xₙ₋₁‖)`, or `θ` when the two iterates
/// coincide. Guarantees `θₙ‖xₙ − xₙ₋₁‖ ≤ εₙ`.
pub fn inertial_theta(theta: f64, epsilon_n: f64, x_n: &Vector, x_prev: &Vector) -> f64 {
    let gap = x_n.distance(x_prev);
    if gap > 0.0 {
        theta.min(epsilon_n / gap)
    } else {
        theta
    }
}
