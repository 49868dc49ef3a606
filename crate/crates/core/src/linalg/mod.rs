//! Minimal dense/sparse complex linear algebra sized for few-dozen-state problems.

pub mod eig;
pub mod sparse;

pub use eig::eigh;
pub use sparse::SparseOp;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::Cx;

/// Conjugating inner product `<a|b>`.
pub fn dot<S: Scalar>(a: &[Cx<S>], b: &[Cx<S>]) -> Cx<S> {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = S::czero();
    for (x, y) in a.iter().zip(b) {
        acc += x.conj() * *y;
    }
    acc
}

/// Squared two-norm.
pub fn norm_sqr<S: Scalar>(a: &[Cx<S>]) -> S {
    a.iter().map(|x| x.norm_sqr()).sum()
}

/// Two-norm.
pub fn norm<S: Scalar>(a: &[Cx<S>]) -> S {
    norm_sqr(a).sqrt()
}

/// `y += alpha * x`.
pub fn axpy<S: Scalar>(alpha: Cx<S>, x: &[Cx<S>], y: &mut [Cx<S>]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * *xi;
    }
}

/// Scales a vector in place.
pub fn scale<S: Scalar>(alpha: Cx<S>, x: &mut [Cx<S>]) {
    for xi in x.iter_mut() {
        *xi *= alpha;
    }
}

/// Normalizes a vector in place; errors on zero norm.
pub fn normalize<S: Scalar>(x: &mut [Cx<S>]) -> Result<()> {
    let n = norm(x);
    if n <= S::zero() {
        return Err(Error::EmptyState);
    }
    scale(S::cre(S::one() / n), x);
    Ok(())
}

/// Dense square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat<S: Scalar> {
    dim: usize,
    data: Vec<Cx<S>>,
}

impl<S: Scalar> CMat<S> {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![S::czero(); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = S::cone();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Cx<S>>]) -> Result<Self> {
        let dim = rows.len();
        let mut m = Self::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: row.len() });
            }
            m.data[i * dim..(i + 1) * dim].copy_from_slice(row);
        }
        Ok(m)
    }

    /// Rank-one projector `|v><v|`.
    pub fn outer(v: &[Cx<S>]) -> Self {
        let dim = v.len();
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = v[i] * v[j].conj();
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[Cx<S>] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Cx<S>] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [Cx<S>] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn column(&self, j: usize) -> Vec<Cx<S>> {
        (0..self.dim).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[Cx<S>]) {
        for i in 0..self.dim {
            self[(i, j)] = v[i];
        }
    }

    pub fn fill_zero(&mut self) {
        self.data.fill(S::czero());
    }

    pub fn copy_from(&mut self, other: &CMat<S>) {
        debug_assert_eq!(self.dim, other.dim);
        self.data.copy_from_slice(&other.data);
    }

    pub fn matvec(&self, x: &[Cx<S>]) -> Vec<Cx<S>> {
        let mut y = vec![S::czero(); self.dim];
        for i in 0..self.dim {
            let mut acc = S::czero();
            for (j, xj) in x.iter().enumerate() {
                acc += self[(i, j)] * *xj;
            }
            y[i] = acc;
        }
        y
    }

    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == S::czero() {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    /// `self += alpha * other`.
    pub fn add_scaled(&mut self, alpha: Cx<S>, other: &Self) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * *b;
        }
    }

    pub fn scale(&mut self, alpha: Cx<S>) {
        for a in self.data.iter_mut() {
            *a *= alpha;
        }
    }

    pub fn trace(&self) -> Cx<S> {
        (0..self.dim).map(|i| self[(i, i)]).fold(S::czero(), |a, b| a + b)
    }

    pub fn max_abs(&self) -> S {
        self.data.iter().map(|x| x.norm()).fold(S::zero(), S::max)
    }

    /// Largest entry-wise deviation from `self = self†`.
    pub fn hermiticity_residual(&self) -> S {
        let mut r = S::zero();
        for i in 0..self.dim {
            for j in i..self.dim {
                r = r.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        r
    }

    /// Symmetrized copy `(self + self†)/2`.
    pub fn hermitian_part(&self) -> Self {
        let n = self.dim;
        let half = S::cre(S::real(0.5));
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = (self[(i, j)] + self[(j, i)].conj()) * half;
            }
        }
        out
    }

    /// Expectation value `<v|M|v>`.
    pub fn expectation(&self, v: &[Cx<S>]) -> Cx<S> {
        dot(v, &self.matvec(v))
    }
}

impl<S: Scalar> std::ops::Index<(usize, usize)> for CMat<S> {
    type Output = Cx<S>;
    fn index(&self, (i, j): (usize, usize)) -> &Cx<S> {
        &self.data[i * self.dim + j]
    }
}

impl<S: Scalar> std::ops::IndexMut<(usize, usize)> for CMat<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Cx<S> {
        &mut self.data[i * self.dim + j]
    }
}
