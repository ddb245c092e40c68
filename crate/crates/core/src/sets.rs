//! Closed convex sets with exact metric projections.

use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};
use crate::hilbert::{BoundedLinearMap, Vector};
use crate::sampling::{gaussian_vector, seeded};

/// Default relative rank tolerance for the null-space factorization.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Orthonormal basis of `null(M)`, computed once at construction so that
/// projecting onto the null space is a pair of small dense products.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionPrecompute {
    basis: Vec<Vector>,
    rank_tol: f64,
}

impl ProjectionPrecompute {
    /// Right singular vectors of `M` whose singular value is at most
    /// `rel_tol * σ_max`. Wide maps are padded with zero rows so the
    /// factorization returns a full set of right singular vectors.
    fn null_space(map: &BoundedLinearMap, rel_tol: f64) -> Self {
        let (rows, cols) = (map.rows(), map.cols());
        let padded_rows = rows.max(cols);
        let mut m = DMatrix::<f64>::zeros(padded_rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = map.get(i, j);
            }
        }
        let svd = m.svd(false, true);
        let v_t = svd.v_t.expect("right singular vectors requested");
        let sigma_max = svd.singular_values.iter().fold(0.0f64, |a, &s| a.max(s));
        let rank_tol = rel_tol * sigma_max;
        let basis = svd
            .singular_values
            .iter()
            .enumerate()
            .filter(|(_, &s)| s <= rank_tol)
            .map(|(i, _)| Vector::from_raw(v_t.row(i).iter().copied().collect()))
            .collect();
        Self { basis, rank_tol }
    }

    pub fn basis(&self) -> &[Vector] {
        &self.basis
    }

    pub fn rank_tol(&self) -> f64 {
        self.rank_tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SetKind {
    Box { lower: Vector, upper: Vector },
    Ball { center: Vector, radius: f64 },
    /// `{x : ⟨a, x⟩ ≤ b}`
    Halfspace { normal: Vector, offset: f64 },
    /// `{x : ⟨a, x⟩ = b}`
    Hyperplane { normal: Vector, offset: f64 },
    Singleton { point: Vector },
    /// `{x : Mx = 0}`
    AffineNullspace {
        map: BoundedLinearMap,
        precompute: ProjectionPrecompute,
    },
    WholeSpace,
}

/// A nonempty closed convex subset of `ℝ^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexSet {
    dim: usize,
    kind: SetKind,
}

impl ConvexSet {
    pub fn boxed(lower: Vector, upper: Vector) -> Result<Self> {
        check_dim("box bounds", lower.dim(), upper.dim())?;
        if let Some(i) = (0..lower.dim()).find(|&i| lower[i] > upper[i]) {
            return Err(Error::InvalidInput(format!(
                "box lower bound exceeds upper bound at index {i}"
            )));
        }
        Ok(Self {
            dim: lower.dim(),
            kind: SetKind::Box { lower, upper },
        })
    }

    pub fn ball(center: Vector, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!("ball radius must be > 0, got {radius}")));
        }
        Ok(Self {
            dim: center.dim(),
            kind: SetKind::Ball { center, radius },
        })
    }

    pub fn halfspace(normal: Vector, offset: f64) -> Result<Self> {
        Self::check_normal(&normal, offset)?;
        Ok(Self {
            dim: normal.dim(),
            kind: SetKind::Halfspace { normal, offset },
        })
    }

    pub fn hyperplane(normal: Vector, offset: f64) -> Result<Self> {
        Self::check_normal(&normal, offset)?;
        Ok(Self {
            dim: normal.dim(),
            kind: SetKind::Hyperplane { normal, offset },
        })
    }

    fn check_normal(normal: &Vector, offset: f64) -> Result<()> {
        if normal.norm_squared() == 0.0 {
            return Err(Error::InvalidInput("normal vector must be nonzero".into()));
        }
        if !offset.is_finite() {
            return Err(Error::NonFinite("set offset"));
        }
        Ok(())
    }

    pub fn singleton(point: Vector) -> Self {
        Self {
            dim: point.dim(),
            kind: SetKind::Singleton { point },
        }
    }

    pub fn affine_nullspace(map: BoundedLinearMap) -> Self {
        Self::affine_nullspace_with_tol(map, DEFAULT_RANK_TOL)
    }

    /// `rel_tol` is relative to `‖M‖`.
    pub fn affine_nullspace_with_tol(map: BoundedLinearMap, rel_tol: f64) -> Self {
        let precompute = ProjectionPrecompute::null_space(&map, rel_tol);
        Self {
            dim: map.cols(),
            kind: SetKind::AffineNullspace { map, precompute },
        }
    }

    pub fn whole_space(dim: usize) -> Self {
        assert!(dim >= 1, "whole space needs dimension >= 1");
        Self {
            dim,
            kind: SetKind::WholeSpace,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &SetKind {
        &self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            SetKind::Box { .. } => "box",
            SetKind::Ball { .. } => "ball",
            SetKind::Halfspace { .. } => "halfspace",
            SetKind::Hyperplane { .. } => "hyperplane",
            SetKind::Singleton { .. } => "singleton",
            SetKind::AffineNullspace { .. } => "affine_nullspace",
            SetKind::WholeSpace => "whole_space",
        }
    }

    pub fn project(&self, x: &Vector) -> Result<Vector> {
        check_dim("project", self.dim, x.dim())?;
        Ok(self.project_unchecked(x))
    }

    pub(crate) fn project_unchecked(&self, x: &Vector) -> Vector {
        match &self.kind {
            SetKind::Box { lower, upper } => {
                let mut out = x.clone().into_vec();
                for (i, v) in out.iter_mut().enumerate() {
                    *v = v.clamp(lower[i], upper[i]);
                }
                Vector::from_raw(out)
            }
            SetKind::Ball { center, radius } => {
                let d = x - center;
                let dist = d.norm();
                if dist <= *radius {
                    x.clone()
                } else {
                    Vector::lincomb(1.0, center, radius / dist, &d)
                }
            }
            SetKind::Halfspace { normal, offset } => {
                let excess = normal.dot(x) - offset;
                if excess <= 0.0 {
                    x.clone()
                } else {
                    Vector::lincomb(1.0, x, -excess / normal.norm_squared(), normal)
                }
            }
            SetKind::Hyperplane { normal, offset } => {
                let excess = normal.dot(x) - offset;
                Vector::lincomb(1.0, x, -excess / normal.norm_squared(), normal)
            }
            SetKind::Singleton { point } => point.clone(),
            SetKind::AffineNullspace { precompute, .. } => {
                let mut out = Vector::zeros(self.dim);
                for b in &precompute.basis {
                    out = Vector::lincomb(1.0, &out, b.dot(x), b);
                }
                out
            }
            SetKind::WholeSpace => x.clone(),
        }
    }

    /// `‖x − P x‖`, zero exactly on the set.
    pub fn membership_residual(&self, x: &Vector) -> Result<f64> {
        Ok(x.distance(&self.project(x)?))
    }

    /// A point known to lie in the set, used to center random samples.
    pub fn anchor(&self) -> Vector {
        match &self.kind {
            SetKind::Box { lower, upper } => Vector::lincomb(0.5, lower, 0.5, upper),
            SetKind::Ball { center, .. } => center.clone(),
            SetKind::Singleton { point } => point.clone(),
            SetKind::Halfspace { .. } | SetKind::Hyperplane { .. } => {
                self.project_unchecked(&Vector::zeros(self.dim))
            }
            SetKind::AffineNullspace { .. } | SetKind::WholeSpace => Vector::zeros(self.dim),
        }
    }

    /// Points of the set obtained by projecting Gaussian samples around
    /// [`anchor`](Self::anchor).
    pub fn sample_points(&self, samples: usize, seed: u64, scale: f64) -> Vec<Vector> {
        let mut rng = seeded(seed);
        let anchor = self.anchor();
        (0..samples)
            .map(|_| {
                let z = &anchor + &gaussian_vector(&mut rng, self.dim, scale);
                self.project_unchecked(&z)
            })
            .collect()
    }
}

/// Outcome of checking `⟨x − Px, y − Px⟩ ≤ 0` over sampled `y` in the set.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacterizationReport {
    pub samples: usize,
    pub seed: u64,
    /// Largest `⟨x − Px, y − Px⟩` seen; `0` when every sample is on the
    /// correct side.
    pub max_violation: f64,
}

impl CharacterizationReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.max_violation <= tol
    }
}

pub fn check_projection_characterization(
    set: &ConvexSet,
    x: &Vector,
    samples: usize,
    seed: u64,
) -> Result<CharacterizationReport> {
    if samples == 0 {
        return Err(Error::InvalidInput("samples must be >= 1".into()));
    }
    let p = set.project(x)?;
    let normal = x - &p;
    let scale = 3.0 * (1.0 + x.distance(&set.anchor()));
    let max_violation = set
        .sample_points(samples, seed, scale)
        .iter()
        .map(|y| normal.dot(&(y - &p)))
        .fold(0.0, f64::max);
    Ok(CharacterizationReport {
        samples,
        seed,
        max_violation,
    })
}
