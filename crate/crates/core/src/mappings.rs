//! Self-maps with declared regularity classes, the averaging transform
//! `S_λ = (1 − λ)I + λS`, and sample-based class checks.
//!
//! Class checks quantify over a finite sample, so they can refute a class
//! membership but never prove one. Every report carries the sample size and
//! seed it was computed from.

use std::fmt;
use std::sync::Arc;

use crate::error::{check_dim, Error, Result};
use crate::hilbert::{BoundedLinearMap, Vector};
use crate::sampling::{gaussian_vector, seeded, uniform_vector};

/// Residual below which a declared fixed point is accepted.
pub const FIXED_POINT_TOL: f64 = 1e-10;

/// Displacements `‖x − Tx‖` at or below this are treated as fixed points
/// by the modulus estimator.
const MOVE_TOL: f64 = 1e-12;

pub trait SelfMap {
    fn dim(&self) -> usize;

    /// Applies the map without checking the dimension.
    fn eval(&self, x: &Vector) -> Vector;

    fn evaluate(&self, x: &Vector) -> Result<Vector> {
        check_dim("evaluate", self.dim(), x.dim())?;
        Ok(self.eval(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MappingClass {
    Contraction(f64),
    Nonexpansive,
    QuasiNonexpansive,
    StrictlyPseudocontractive(f64),
    Demicontractive(f64),
    Generic,
}

impl MappingClass {
    pub fn modulus(&self) -> Option<f64> {
        match *self {
            Self::Contraction(c) => Some(c),
            Self::StrictlyPseudocontractive(k) | Self::Demicontractive(k) => Some(k),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match self.modulus() {
            Some(m) if !(0.0..1.0).contains(&m) => Err(Error::InvalidInput(format!(
                "class modulus must lie in [0, 1), got {m}"
            ))),
            _ => Ok(()),
        }
    }
}

type MapFn = dyn Fn(&Vector) -> Vector + Send + Sync;

#[derive(Clone)]
pub enum MapKind {
    Identity,
    Zero,
    /// The piecewise map on `[0, 1]`: `7/8` below one, `1/4` at one.
    Example22,
    Linear(BoundedLinearMap),
    Scale(f64),
    /// `x ↦ Mx + offset`
    Affine {
        map: BoundedLinearMap,
        offset: Vector,
    },
    Custom(Arc<MapFn>),
}

impl fmt::Debug for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Identity => write!(f, "Identity"),
            Self::Zero => write!(f, "Zero"),
            Self::Example22 => write!(f, "Example22"),
            Self::Linear(m) => f.debug_tuple("Linear").field(m).finish(),
            Self::Scale(c) => f.debug_tuple("Scale").field(c).finish(),
            Self::Affine { map, offset } => f
                .debug_struct("Affine")
                .field("map", map)
                .field("offset", offset)
                .finish(),
            Self::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// A self-map of `ℝ^dim` together with what is claimed about it.
///
/// `demiclosed_assumed` records the user's assumption that `I − T` is
/// demiclosed at zero. It is carried along for reporting and never checked.
#[derive(Debug, Clone)]
pub struct MappingSpec {
    name: String,
    dim: usize,
    kind: MapKind,
    class: MappingClass,
    known_fixed_points: Vec<Vector>,
    demiclosed_assumed: bool,
}

impl MappingSpec {
    fn build(name: impl Into<String>, dim: usize, kind: MapKind, class: MappingClass) -> Self {
        Self {
            name: name.into(),
            dim,
            kind,
            class,
            known_fixed_points: Vec::new(),
            demiclosed_assumed: false,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::build("identity", dim, MapKind::Identity, MappingClass::Nonexpansive)
    }

    /// The null map `g ≡ 0`, a contraction with modulus 0.
    pub fn zero(dim: usize) -> Self {
        let mut m = Self::build("zero", dim, MapKind::Zero, MappingClass::Contraction(0.0));
        m.known_fixed_points.push(Vector::zeros(dim));
        m
    }

    /// One-dimensional map on `[0, 1]` that is demicontractive with
    /// modulus `2/3` but not quasi-nonexpansive. Its only fixed point is
    /// `7/8`. Inputs above one are mapped like `1`, inputs below zero like
    /// the interior.
    pub fn example_2_2() -> Self {
        let mut m = Self::build(
            "example-2.2",
            1,
            MapKind::Example22,
            MappingClass::Demicontractive(2.0 / 3.0),
        );
        m.known_fixed_points.push(Vector::from_raw(vec![7.0 / 8.0]));
        m.demiclosed_assumed = true;
        m
    }

    pub fn linear(map: BoundedLinearMap) -> Result<Self> {
        check_dim("linear mapping (square)", map.rows(), map.cols())?;
        let dim = map.cols();
        let mut m = Self::build("linear", dim, MapKind::Linear(map), MappingClass::Generic);
        m.known_fixed_points.push(Vector::zeros(dim));
        Ok(m)
    }

    /// `x ↦ c·x` with `|c| < 1`.
    pub fn contraction_scale(dim: usize, c: f64) -> Result<Self> {
        if !(c.abs() < 1.0) {
            return Err(Error::InvalidInput(format!(
                "contraction-scale factor must satisfy |c| < 1, got {c}"
            )));
        }
        let mut m = Self::build(
            format!("contraction-scale:{c}"),
            dim,
            MapKind::Scale(c),
            MappingClass::Contraction(c.abs()),
        );
        m.known_fixed_points.push(Vector::zeros(dim));
        Ok(m)
    }

    pub fn affine(map: BoundedLinearMap, offset: Vector) -> Result<Self> {
        check_dim("affine mapping (square)", map.rows(), map.cols())?;
        check_dim("affine offset", map.rows(), offset.dim())?;
        Ok(Self::build(
            "affine",
            map.cols(),
            MapKind::Affine { map, offset },
            MappingClass::Generic,
        ))
    }

    pub fn custom(
        name: impl Into<String>,
        dim: usize,
        f: impl Fn(&Vector) -> Vector + Send + Sync + 'static,
    ) -> Self {
        Self::build(name, dim, MapKind::Custom(Arc::new(f)), MappingClass::Generic)
    }

    /// Resolves the names accepted in problem configs: `identity`, `zero`,
    /// `example-2.2`, `linear:<matrix>` with a JSON-style row-major matrix
    /// literal, and `contraction-scale:<c>`.
    pub fn from_name(name: &str, dim: usize) -> Result<Self> {
        let spec = match name.split_once(':') {
            None => match name {
                "identity" => Self::identity(dim),
                "zero" => Self::zero(dim),
                "example-2.2" => Self::example_2_2(),
                _ => return Err(Error::InvalidInput(format!("unknown mapping name {name:?}"))),
            },
            Some(("linear", literal)) => Self::linear(parse_matrix_literal(literal)?)?,
            Some(("contraction-scale", c)) => {
                let c = c.trim().parse::<f64>().map_err(|e| {
                    Error::InvalidInput(format!("bad contraction-scale factor {c:?}: {e}"))
                })?;
                Self::contraction_scale(dim, c)?
            }
            Some(_) => return Err(Error::InvalidInput(format!("unknown mapping name {name:?}"))),
        };
        check_dim("named mapping dimension", dim, spec.dim)?;
        Ok(spec)
    }

    pub fn with_class(mut self, class: MappingClass) -> Result<Self> {
        class.validate()?;
        self.class = class;
        Ok(self)
    }

    /// Replaces the known fixed points; each must have residual at most
    /// [`FIXED_POINT_TOL`].
    pub fn with_fixed_points(mut self, points: Vec<Vector>) -> Result<Self> {
        for p in &points {
            check_dim("fixed point", self.dim, p.dim())?;
            let residual = self.eval(p).distance(p);
            if residual > FIXED_POINT_TOL {
                return Err(Error::NotFixedPoint { residual });
            }
        }
        self.known_fixed_points = points;
        Ok(self)
    }

    pub fn with_demiclosed_assumption(mut self, assumed: bool) -> Self {
        self.demiclosed_assumed = assumed;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    pub fn class(&self) -> MappingClass {
        self.class
    }

    pub fn known_fixed_points(&self) -> &[Vector] {
        &self.known_fixed_points
    }

    pub fn demiclosed_assumed(&self) -> bool {
        self.demiclosed_assumed
    }
}

impl SelfMap for MappingSpec {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &Vector) -> Vector {
        match &self.kind {
            MapKind::Identity => x.clone(),
            MapKind::Zero => Vector::zeros(self.dim),
            MapKind::Example22 => {
                let out = if x[0] < 1.0 { 7.0 / 8.0 } else { 0.25 };
                Vector::from_raw(vec![out])
            }
            MapKind::Linear(m) => m.apply_unchecked(x),
            MapKind::Scale(c) => x.scale(*c),
            MapKind::Affine { map, offset } => &map.apply_unchecked(x) + offset,
            MapKind::Custom(f) => f(x),
        }
    }
}

/// `S_λ = (1 − λ)I + λS`.
#[derive(Debug, Clone)]
pub struct AveragedMapping {
    base: MappingSpec,
    lambda: f64,
    class: MappingClass,
}

impl AveragedMapping {
    pub fn base(&self) -> &MappingSpec {
        &self.base
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn class(&self) -> MappingClass {
        self.class
    }

    /// Averaging keeps the fixed-point set, so these are the base map's.
    pub fn known_fixed_points(&self) -> &[Vector] {
        self.base.known_fixed_points()
    }
}

impl SelfMap for AveragedMapping {
    fn dim(&self) -> usize {
        self.base.dim
    }

    fn eval(&self, x: &Vector) -> Vector {
        if self.lambda == 1.0 {
            return self.base.eval(x);
        }
        Vector::lincomb(1.0 - self.lambda, x, self.lambda, &self.base.eval(x))
    }
}

/// Builds `S_λ` for `λ ∈ (0, 1]`. A `k`-demicontractive base with
/// `λ < 1 − k` yields a map tagged quasi-nonexpansive.
pub fn average(base: &MappingSpec, lambda: f64) -> Result<AveragedMapping> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "averaging parameter must lie in (0, 1], got {lambda}"
        )));
    }
    let class = match base.class {
        MappingClass::Demicontractive(k) if lambda < 1.0 - k => MappingClass::QuasiNonexpansive,
        MappingClass::Contraction(c) => MappingClass::Contraction(1.0 - lambda + lambda * c),
        c @ (MappingClass::Nonexpansive | MappingClass::QuasiNonexpansive) => c,
        c if lambda == 1.0 => c,
        _ => MappingClass::Generic,
    };
    Ok(AveragedMapping {
        base: base.clone(),
        lambda,
        class,
    })
}

/// `‖T x − x‖`.
pub fn fixed_point_residual<T: SelfMap + ?Sized>(map: &T, x: &Vector) -> Result<f64> {
    Ok(map.evaluate(x)?.distance(x))
}

/// Where class checks draw their points from.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainSampler {
    /// Evenly spaced points of `[lo, hi] ⊂ ℝ`, both ends included. Ignores
    /// the sample count and seed.
    Grid1D { lo: f64, hi: f64, step: f64 },
    UniformBox { lower: Vec<f64>, upper: Vec<f64> },
    Gaussian { center: Vec<f64>, scale: f64 },
}

impl DomainSampler {
    /// Draws points in a fixed order, so a larger `samples` with the same
    /// seed extends a smaller draw.
    pub fn points(&self, samples: usize, seed: u64) -> Vec<Vector> {
        match self {
            Self::Grid1D { lo, hi, step } => {
                let count = ((hi - lo) / step).round() as usize;
                (0..=count)
                    .map(|i| {
                        let x = if i == count { *hi } else { lo + i as f64 * step };
                        Vector::from_raw(vec![x])
                    })
                    .collect()
            }
            Self::UniformBox { lower, upper } => {
                let mut rng = seeded(seed);
                (0..samples)
                    .map(|_| uniform_vector(&mut rng, lower, upper))
                    .collect()
            }
            Self::Gaussian { center, scale } => {
                let mut rng = seeded(seed);
                let c = Vector::from_raw(center.clone());
                (0..samples)
                    .map(|_| &c + &gaussian_vector(&mut rng, c.dim(), *scale))
                    .collect()
            }
        }
    }
}

fn require_fixed<T: SelfMap + ?Sized>(map: &T, p: &Vector) -> Result<()> {
    let residual = fixed_point_residual(map, p)?;
    if residual > FIXED_POINT_TOL {
        return Err(Error::NotFixedPoint { residual });
    }
    Ok(())
}

/// Smallest `k ≥ 0` with `‖Tx − p‖² ≤ ‖x − p‖² + k‖x − Tx‖²` on every
/// sampled `x`. A value below one certifies demicontractivity on the
/// sample only.
pub fn estimate_demicontractive_modulus<T: SelfMap + ?Sized>(
    map: &T,
    fixed_point: &Vector,
    sampler: &DomainSampler,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    require_fixed(map, fixed_point)?;
    let mut k = 0.0f64;
    for x in sampler.points(samples, seed) {
        check_dim("sampled point", map.dim(), x.dim())?;
        let tx = map.eval(&x);
        let moved = x.distance(&tx);
        if moved <= MOVE_TOL {
            continue;
        }
        let excess = tx.distance(fixed_point).powi(2) - x.distance(fixed_point).powi(2);
        k = k.max(excess / (moved * moved));
    }
    Ok(k)
}

/// Worst-case slack of a sampled inequality, with the point attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct SlackReport {
    pub samples: usize,
    pub seed: u64,
    pub max_slack: f64,
    pub witness: Option<Vector>,
}

impl SlackReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.max_slack <= tol
    }
}

/// Max of `‖Tx − p‖ − ‖x − p‖` over the sample; nonpositive (up to
/// rounding) is consistent with quasi-nonexpansiveness.
pub fn verify_quasi_nonexpansive<T: SelfMap + ?Sized>(
    map: &T,
    fixed_point: &Vector,
    sampler: &DomainSampler,
    samples: usize,
    seed: u64,
) -> Result<SlackReport> {
    require_fixed(map, fixed_point)?;
    let points = sampler.points(samples, seed);
    let mut report = SlackReport {
        samples: points.len(),
        seed,
        max_slack: f64::NEG_INFINITY,
        witness: None,
    };
    for x in points {
        check_dim("sampled point", map.dim(), x.dim())?;
        let slack = map.eval(&x).distance(fixed_point) - x.distance(fixed_point);
        if slack > report.max_slack {
            report.max_slack = slack;
            report.witness = Some(x);
        }
    }
    Ok(report)
}

/// Max of `‖Tx − Ty‖ − L‖x − y‖` over consecutive pairs of sampled points.
/// `L = 1` tests nonexpansiveness, `L = c < 1` a contraction.
pub fn lipschitz_slack<T: SelfMap + ?Sized>(
    map: &T,
    constant: f64,
    sampler: &DomainSampler,
    samples: usize,
    seed: u64,
) -> Result<SlackReport> {
    let points = sampler.points(samples, seed);
    let mut report = SlackReport {
        samples: points.len(),
        seed,
        max_slack: f64::NEG_INFINITY,
        witness: None,
    };
    let images = points
        .iter()
        .map(|x| map.evaluate(x))
        .collect::<Result<Vec<_>>>()?;
    for i in 1..points.len() {
        let slack =
            images[i].distance(&images[i - 1]) - constant * points[i].distance(&points[i - 1]);
        if slack > report.max_slack {
            report.max_slack = slack;
            report.witness = Some(points[i].clone());
        }
    }
    Ok(report)
}

pub(crate) fn parse_matrix_literal(literal: &str) -> Result<BoundedLinearMap> {
    let bad = |msg: &str| Error::InvalidInput(format!("bad matrix literal {literal:?}: {msg}"));
    let body = literal.trim();
    let inner = body
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| bad("expected [[...], ...]"))?;
    let mut rows = Vec::new();
    for chunk in inner.split(']') {
        let chunk = chunk.trim().trim_start_matches(',').trim();
        if chunk.is_empty() {
            continue;
        }
        let row = chunk
            .strip_prefix('[')
            .ok_or_else(|| bad("expected row to start with ["))?;
        let values = row
            .split(',')
            .map(|t| parse_number(t.trim()).ok_or_else(|| bad(&format!("bad entry {t:?}"))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(values);
    }
    BoundedLinearMap::from_rows(&rows)
}

/// Accepts plain decimals and `p/q` fractions.
fn parse_number(token: &str) -> Option<f64> {
    match token.split_once('/') {
        Some((p, q)) => Some(p.trim().parse::<f64>().ok()? / q.trim().parse::<f64>().ok()?),
        None => token.parse().ok(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn s(x: f64) -> Vector {
        Vector::from_raw(vec![x])
    }

    fn grid() -> DomainSampler {
        DomainSampler::Grid1D {
            lo: 0.0,
            hi: 1.0,
            step: 1e-4,
        }
    }

    #[test]
    fn evaluate_examples() {
        let x = Vector::from_slice(&[1.0, -2.0]).unwrap();
        assert_eq!(MappingSpec::identity(2).evaluate(&x).unwrap(), x);
        let t = MappingSpec::example_2_2();
        assert_eq!(t.evaluate(&s(0.5)).unwrap(), s(7.0 / 8.0));
        assert_eq!(t.evaluate(&s(1.0)).unwrap(), s(0.25));
        assert!(t.evaluate(&x).is_err());
    }

    #[test]
    fn average_examples() {
        let t = MappingSpec::example_2_2();
        let full = average(&t, 1.0).unwrap();
        for x in [0.0, 0.3, 0.999, 1.0] {
            assert_eq!(full.evaluate(&s(x)).unwrap(), t.evaluate(&s(x)).unwrap());
        }
        let quarter = average(&t, 0.25).unwrap();
        assert_relative_eq!(quarter.evaluate(&s(1.0)).unwrap()[0], 0.8125, epsilon = 1e-15);
        assert_eq!(quarter.class(), MappingClass::QuasiNonexpansive);
        assert_eq!(average(&t, 0.5).unwrap().class(), MappingClass::Generic);
        assert!(average(&t, 0.0).is_err());
        assert!(average(&t, 1.5).is_err());
    }

    #[test]
    fn averaged_example_is_fejer_on_grid() {
        let avg = average(&MappingSpec::example_2_2(), 0.25).unwrap();
        let p = 7.0 / 8.0;
        for x in grid().points(0, 0) {
            let tx = avg.eval(&x)[0];
            assert!((tx - p).abs() <= (x[0] - p).abs() + 1e-15, "x = {}", x[0]);
        }
    }

    #[test]
    fn fixed_point_residual_examples() {
        let t = MappingSpec::example_2_2();
        assert_eq!(fixed_point_residual(&t, &s(7.0 / 8.0)).unwrap(), 0.0);
        assert_eq!(fixed_point_residual(&t, &s(1.0)).unwrap(), 0.75);
        let id = MappingSpec::identity(3);
        assert_eq!(fixed_point_residual(&id, &Vector::filled(3, 2.0)).unwrap(), 0.0);
    }

    #[test]
    fn modulus_examples() {
        let id = MappingSpec::identity(1);
        assert_eq!(
            estimate_demicontractive_modulus(&id, &s(0.3), &grid(), 0, 0).unwrap(),
            0.0
        );
        let t = MappingSpec::example_2_2();
        let k = estimate_demicontractive_modulus(&t, &s(7.0 / 8.0), &grid(), 0, 0).unwrap();
        assert_relative_eq!(k, 2.0 / 3.0, epsilon = 1e-12);
        let g = MappingSpec::contraction_scale(2, 0.5).unwrap();
        let gauss = DomainSampler::Gaussian {
            center: vec![0.0, 0.0],
            scale: 2.0,
        };
        let kg = estimate_demicontractive_modulus(&g, &Vector::zeros(2), &gauss, 500, 3).unwrap();
        assert!(kg <= 0.0);
    }

    #[test]
    fn modulus_rejects_non_fixed_point() {
        let t = MappingSpec::example_2_2();
        assert!(matches!(
            estimate_demicontractive_modulus(&t, &s(0.5), &grid(), 0, 0),
            Err(Error::NotFixedPoint { .. })
        ));
        assert!(verify_quasi_nonexpansive(&t, &s(1.0), &grid(), 0, 0).is_err());
    }

    #[test]
    fn quasi_nonexpansive_examples() {
        let id = MappingSpec::identity(1);
        let r = verify_quasi_nonexpansive(&id, &s(0.2), &grid(), 0, 0).unwrap();
        assert_eq!(r.max_slack, 0.0);

        let t = MappingSpec::example_2_2();
        let r = verify_quasi_nonexpansive(&t, &s(7.0 / 8.0), &grid(), 0, 0).unwrap();
        assert_relative_eq!(r.max_slack, 0.5, epsilon = 1e-15);
        assert_eq!(r.witness, Some(s(1.0)));
        assert!(!r.holds(1e-10));

        let avg = average(&t, 0.25).unwrap();
        let r = verify_quasi_nonexpansive(&avg, &s(7.0 / 8.0), &grid(), 0, 0).unwrap();
        assert!(r.holds(1e-10), "slack {}", r.max_slack);
    }

    #[test]
    fn named_mappings() {
        assert_eq!(MappingSpec::from_name("zero", 3).unwrap().dim(), 3);
        assert_eq!(MappingSpec::from_name("identity", 2).unwrap().dim(), 2);
        assert_eq!(MappingSpec::from_name("example-2.2", 1).unwrap().dim(), 1);
        assert!(MappingSpec::from_name("example-2.2", 2).is_err());
        let lin = MappingSpec::from_name("linear:[[1/3, 1/3], [0, 1]]", 2).unwrap();
        let out = lin.evaluate(&Vector::from_slice(&[3.0, 3.0]).unwrap()).unwrap();
        assert_relative_eq!(out[0], 2.0, epsilon = 1e-15);
        assert_eq!(out[1], 3.0);
        let c = MappingSpec::from_name("contraction-scale:0.5", 2).unwrap();
        assert_eq!(c.class(), MappingClass::Contraction(0.5));
        assert!(MappingSpec::from_name("contraction-scale:1.5", 2).is_err());
        assert!(MappingSpec::from_name("linear:[[1,2]]", 2).is_err());
        assert!(MappingSpec::from_name("bogus", 2).is_err());
    }

    #[test]
    fn class_and_fixed_point_validation() {
        let id = MappingSpec::identity(1);
        assert!(id.clone().with_class(MappingClass::Demicontractive(1.0)).is_err());
        assert!(id.clone().with_class(MappingClass::Demicontractive(0.5)).is_ok());
        let t = MappingSpec::example_2_2();
        assert!(t.clone().with_fixed_points(vec![s(0.5)]).is_err());
        assert!(t.with_fixed_points(vec![s(0.875)]).is_ok());
    }
}
