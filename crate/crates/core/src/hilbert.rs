//! Finite-dimensional real inner-product spaces and dense linear maps.
//!
//! [`Vector`] stands in for an element of a real Hilbert space and
//! [`BoundedLinearMap`] for a bounded linear operator between two of them.
//! Arithmetic operators on vectors panic on a dimension mismatch, the same
//! way `ndarray` does; the fallible entry points used at API boundaries
//! (`inner_product`, `apply`, `apply_adjoint`) return [`Error`] instead.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{check_dim, Error, Result};

/// A finite real vector with at least one entry, all finite.
#[derive(Clone, PartialEq)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidInput("vector must have dimension >= 1".into()));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("vector entries"));
        }
        Ok(Self(entries))
    }

    pub fn from_slice(entries: &[f64]) -> Result<Self> {
        Self::new(entries.to_vec())
    }

    /// Builds a vector without validating finiteness. Used for results of
    /// arithmetic, whose finiteness is monitored by the caller.
    pub(crate) fn from_raw(entries: Vec<f64>) -> Self {
        debug_assert!(!entries.is_empty());
        Self(entries)
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "vector dimension must be >= 1");
        Self(vec![0.0; dim])
    }

    pub fn filled(dim: usize, value: f64) -> Self {
        assert!(dim >= 1, "vector dimension must be >= 1");
        Self(vec![value; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dot: dimension mismatch");
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn distance(&self, other: &Vector) -> f64 {
        (self - other).norm()
    }

    pub fn scale(&self, factor: f64) -> Vector {
        Vector(self.0.iter().map(|v| v * factor).collect())
    }

    /// `a * x + b * y`.
    pub fn lincomb(a: f64, x: &Vector, b: f64, y: &Vector) -> Vector {
        assert_eq!(x.dim(), y.dim(), "lincomb: dimension mismatch");
        Vector(x.0.iter().zip(&y.0).map(|(xi, yi)| a * xi + b * yi).collect())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Vector {
        Vector(self.0.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Vector, f: impl Fn(f64, f64) -> f64) -> Vector {
        assert_eq!(self.dim(), other.dim(), "zip_map: dimension mismatch");
        Vector(self.0.iter().zip(&other.0).map(|(&a, &b)| f(a, b)).collect())
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.0).finish()
    }
}

impl std::ops::Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for &Vector {
    type Output = Vector;
    fn add(self, rhs: &Vector) -> Vector {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &Vector {
    type Output = Vector;
    fn sub(self, rhs: &Vector) -> Vector {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Neg for &Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        self.map(|v| -v)
    }
}

impl Mul<&Vector> for f64 {
    type Output = Vector;
    fn mul(self, rhs: &Vector) -> Vector {
        rhs.scale(self)
    }
}

/// `⟨x, y⟩ = Σ xᵢyᵢ`.
pub fn inner_product(x: &Vector, y: &Vector) -> Result<f64> {
    check_dim("inner_product", x.dim(), y.dim())?;
    Ok(x.dot(y))
}

pub fn norm(x: &Vector) -> f64 {
    x.norm()
}

/// Dense real matrix acting as a bounded linear map `ℝ^cols → ℝ^rows`.
/// Storage is row-major.
#[derive(Clone, PartialEq)]
pub struct BoundedLinearMap {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl BoundedLinearMap {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput(format!(
                "matrix shape must be positive, got {rows}x{cols}"
            )));
        }
        check_dim("matrix data length", rows * cols, data.len())?;
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(nrows * ncols);
        for row in rows {
            check_dim("matrix row length", ncols, row.as_ref().len())?;
            data.extend_from_slice(row.as_ref());
        }
        Self::new(nrows, ncols, data)
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        assert!(n >= 1, "diagonal map needs at least one entry");
        let mut data = vec![0.0; n * n];
        for (i, d) in diag.iter().enumerate() {
            data[i * n + i] = *d;
        }
        Self { rows: n, cols: n, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut data = vec![0.0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                data[j * self.rows + i] = self.get(i, j);
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    /// `I − M` for a square map.
    pub fn identity_minus(&self) -> Result<Self> {
        check_dim("identity_minus (square)", self.rows, self.cols)?;
        let mut out = self.data.iter().map(|v| -v).collect::<Vec<_>>();
        for i in 0..self.rows {
            out[i * self.cols + i] += 1.0;
        }
        Self::new(self.rows, self.cols, out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        check_dim("apply", self.cols, x.dim())?;
        Ok(self.apply_unchecked(x))
    }

    pub fn apply_adjoint(&self, y: &Vector) -> Result<Vector> {
        check_dim("apply_adjoint", self.rows, y.dim())?;
        Ok(self.apply_adjoint_unchecked(y))
    }

    pub(crate) fn apply_unchecked(&self, x: &Vector) -> Vector {
        let xs = x.as_slice();
        Vector::from_raw(
            (0..self.rows)
                .map(|i| self.row(i).iter().zip(xs).map(|(a, b)| a * b).sum())
                .collect(),
        )
    }

    pub(crate) fn apply_adjoint_unchecked(&self, y: &Vector) -> Vector {
        let mut out = vec![0.0; self.cols];
        for (i, yi) in y.as_slice().iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * yi;
            }
        }
        Vector::from_raw(out)
    }

    /// Largest singular value by power iteration on `M*M`, started from the
    /// normalized all-ones vector. Stops once the relative change of the
    /// estimate `‖M v‖` falls to `tol`.
    pub fn operator_norm(&self, tol: f64, max_iter: usize) -> Result<f64> {
        if !(tol > 0.0) || max_iter == 0 {
            return Err(Error::InvalidInput(format!(
                "operator_norm needs tol > 0 and max_iter >= 1 (got {tol}, {max_iter})"
            )));
        }
        let n = self.cols;
        let ones = Vector::filled(n, 1.0 / (n as f64).sqrt());
        // the all-ones start can sit in the null space; fall back to
        // coordinate vectors, and a map that kills all of them is zero
        let starts = std::iter::once(ones).chain((0..n).map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            Vector::from_raw(e)
        }));
        for start in starts {
            if self.apply_unchecked(&start).norm() > 0.0 {
                return self.power_iterate(start, tol, max_iter);
            }
        }
        Ok(0.0)
    }

    fn power_iterate(&self, mut v: Vector, tol: f64, max_iter: usize) -> Result<f64> {
        let mut estimate = self.apply_unchecked(&v).norm();
        for _ in 0..max_iter {
            let w = self.apply_adjoint_unchecked(&self.apply_unchecked(&v));
            let w_norm = w.norm();
            if w_norm == 0.0 {
                return Ok(estimate);
            }
            v = w.scale(1.0 / w_norm);
            let next = self.apply_unchecked(&v).norm();
            if (next - estimate).abs() <= tol * next {
                return Ok(next);
            }
            estimate = next;
        }
        Err(Error::NoConvergence {
            estimate,
            iterations: max_iter,
        })
    }
}

impl fmt::Debug for BoundedLinearMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundedLinearMap")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .field("data", &self.to_rows())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_slice(xs).unwrap()
    }

    #[test]
    fn inner_product_examples() {
        assert_eq!(inner_product(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(), 0.0);
        assert_eq!(inner_product(&v(&[1.0, 2.0]), &v(&[3.0, 4.0])).unwrap(), 11.0);
        assert!(matches!(
            inner_product(&v(&[1.0]), &v(&[1.0, 2.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn norm_examples() {
        assert_eq!(norm(&v(&[3.0, 4.0])), 5.0);
        assert_eq!(norm(&Vector::zeros(4)), 0.0);
    }

    #[test]
    fn rejects_bad_vectors() {
        assert!(Vector::new(vec![]).is_err());
        assert!(Vector::new(vec![1.0, f64::NAN]).is_err());
        assert!(Vector::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn apply_and_adjoint_examples() {
        let id = BoundedLinearMap::identity(3);
        let x = v(&[1.0, 2.0, 3.0]);
        assert_eq!(id.apply(&x).unwrap(), x);
        assert_eq!(id.apply_adjoint(&x).unwrap(), x);

        let row = BoundedLinearMap::from_rows(&[[1.0, 2.0]]).unwrap();
        assert_eq!(row.apply_adjoint(&v(&[3.0])).unwrap(), v(&[3.0, 6.0]));
        assert_eq!(row.apply(&v(&[1.0, 1.0])).unwrap(), v(&[3.0]));
        assert!(row.apply(&v(&[1.0])).is_err());
        assert!(row.apply_adjoint(&v(&[1.0, 1.0])).is_err());
    }

    #[test]
    fn rejects_ragged_rows() {
        let rows: Vec<Vec<f64>> = vec![vec![1.0, 2.0], vec![3.0]];
        assert!(BoundedLinearMap::from_rows(&rows).is_err());
    }

    #[test]
    fn operator_norm_examples() {
        let id = BoundedLinearMap::identity(3);
        assert_relative_eq!(id.operator_norm(1e-12, 100).unwrap(), 1.0, epsilon = 1e-12);
        let d = BoundedLinearMap::diagonal(&[1.0, 2.0, 3.0]);
        assert_relative_eq!(d.operator_norm(1e-14, 1000).unwrap(), 3.0, max_relative = 1e-6);
        let z = BoundedLinearMap::new(2, 2, vec![0.0; 4]).unwrap();
        assert_eq!(z.operator_norm(1e-12, 10).unwrap(), 0.0);
    }

    #[test]
    fn operator_norm_start_in_null_space() {
        // (1, -1) kills the all-ones start vector
        let m = BoundedLinearMap::from_rows(&[[1.0, -1.0]]).unwrap();
        assert_relative_eq!(
            m.operator_norm(1e-12, 100).unwrap(),
            2f64.sqrt(),
            max_relative = 1e-10
        );
    }

    #[test]
    fn operator_norm_reports_non_convergence() {
        let d = BoundedLinearMap::diagonal(&[1.0, 0.999_999]);
        match d.operator_norm(1e-300, 3) {
            Err(Error::NoConvergence { estimate, iterations }) => {
                assert_eq!(iterations, 3);
                assert!(estimate > 0.99);
            }
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn identity_minus_and_transpose() {
        let m = BoundedLinearMap::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(m.identity_minus().unwrap().to_rows(), vec![vec![0.0, -2.0], vec![-3.0, -3.0]]);
        assert_eq!(m.transpose().to_rows(), vec![vec![1.0, 3.0], vec![2.0, 4.0]]);
    }
}
