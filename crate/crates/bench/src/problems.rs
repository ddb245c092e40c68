//! Built-in problem instances.

use sfp_core::sampling::{gaussian_vector, seeded, uniform, SeededRng};
use sfp_core::{BoundedLinearMap, ConvexSet, MappingSpec, Result, SfpProblem, Vector};

/// Upper bidiagonal averaging matrix whose fixed points are the multiples
/// of `(1/16, 1/8, 1/4, 1/2, 1)`.
pub fn s4_matrix_s() -> BoundedLinearMap {
    let t = 1.0 / 3.0;
    BoundedLinearMap::from_rows(&[
        [t, t, 0.0, 0.0, 0.0],
        [0.0, t, t, 0.0, 0.0],
        [0.0, 0.0, t, t, 0.0],
        [0.0, 0.0, 0.0, t, t],
        [0.0, 0.0, 0.0, 0.0, 1.0],
    ])
    .expect("static matrix")
}

pub fn s4_matrix_a() -> BoundedLinearMap {
    BoundedLinearMap::from_rows(&[
        [1.0, 1.0, 2.0, 2.0, 1.0],
        [0.0, 2.0, 1.0, 5.0, -1.0],
        [1.0, 1.0, 0.0, 4.0, 1.0],
        [2.0, 0.0, 3.0, 1.0, 5.0],
        [2.0, 2.0, 3.0, 6.0, 1.0],
    ])
    .expect("static matrix")
}

pub const S4_SOLUTION: [f64; 5] = [1.0 / 16.0, 1.0 / 8.0, 1.0 / 4.0, 0.5, 1.0];

/// Right-hand side `b = A x*`. The third entry is `51/16`; the printed
/// value `19/16` is not consistent with `A` and `x*`.
pub const S4_RHS: [f64; 5] = [43.0 / 16.0, 2.0, 51.0 / 16.0, 51.0 / 8.0, 41.0 / 8.0];

/// Right-hand side as printed alongside the table.
pub const S4_RHS_AS_PRINTED: [f64; 5] = [43.0 / 16.0, 2.0, 19.0 / 16.0, 51.0 / 8.0, 41.0 / 8.0];

/// The linear-system instance: `C = Fix(S)` realized as `null(I − S)`,
/// `Q = {b}`, `g ≡ 0`, with the known solution attached.
pub fn build_example_s4() -> SfpProblem {
    let s = s4_matrix_s();
    let x_star = Vector::from_slice(&S4_SOLUTION).expect("finite");
    let c = ConvexSet::affine_nullspace(s.identity_minus().expect("square"));
    let q = ConvexSet::singleton(Vector::from_slice(&S4_RHS).expect("finite"));
    let s_map = MappingSpec::linear(s)
        .and_then(|m| m.with_fixed_points(vec![x_star.clone()]))
        .expect("x* is fixed by S")
        .with_demiclosed_assumption(true);
    SfpProblem::new(s4_matrix_a(), c, q, Some(s_map), MappingSpec::zero(5))
        .and_then(|p| p.with_known_solution(x_star))
        .expect("static instance is consistent")
}

pub fn s4_solution() -> Vector {
    Vector::from_slice(&S4_SOLUTION).expect("finite")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetFamily {
    Box,
    Ball,
    Halfspace,
}

impl SetFamily {
    pub const ALL: [SetFamily; 3] = [Self::Box, Self::Ball, Self::Halfspace];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Box => "box",
            Self::Ball => "ball",
            Self::Halfspace => "halfspace",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// A set of the given family containing `point`, with some room around it.
fn set_around(rng: &mut SeededRng, family: SetFamily, point: &Vector) -> Result<ConvexSet> {
    let dim = point.dim();
    match family {
        SetFamily::Box => {
            let lower = (0..dim)
                .map(|i| point[i] - uniform(rng, 0.1, 1.0))
                .collect();
            let upper = (0..dim)
                .map(|i| point[i] + uniform(rng, 0.1, 1.0))
                .collect();
            ConvexSet::boxed(Vector::new(lower)?, Vector::new(upper)?)
        }
        SetFamily::Ball => {
            let radius = uniform(rng, 0.5, 1.5);
            let dir = gaussian_vector(rng, dim, 1.0);
            let shift = uniform(rng, 0.0, 0.9) * radius / dir.norm().max(1e-300);
            let center = Vector::lincomb(1.0, point, shift, &dir);
            ConvexSet::ball(center, radius)
        }
        SetFamily::Halfspace => {
            let normal = gaussian_vector(rng, dim, 1.0);
            let offset = normal.dot(point) + uniform(rng, 0.0, 1.0);
            ConvexSet::halfspace(normal, offset)
        }
    }
}

/// Random consistent instance. A feasible point `x̂` is planted first and
/// both sets are drawn around it (`C` around `x̂`, `Q` around `Ax̂`), so the
/// attached known solution is a feasible point, not necessarily the limit
/// of any particular iteration.
pub fn generate_random_sfp(
    dim1: usize,
    dim2: usize,
    family: SetFamily,
    seed: u64,
) -> Result<SfpProblem> {
    if dim1 == 0 || dim2 == 0 {
        return Err(sfp_core::Error::InvalidInput("dimensions must be >= 1".into()));
    }
    let mut rng = seeded(seed);
    let a_entries = gaussian_vector(&mut rng, dim1 * dim2, 1.0).into_vec();
    let a = BoundedLinearMap::new(dim2, dim1, a_entries)?;
    let planted = gaussian_vector(&mut rng, dim1, 1.0);
    let c = set_around(&mut rng, family, &planted)?;
    let q = set_around(&mut rng, family, &a.apply(&planted)?)?;
    SfpProblem::new(a, c, q, None, MappingSpec::zero(dim1))?.with_known_solution(planted)
}
