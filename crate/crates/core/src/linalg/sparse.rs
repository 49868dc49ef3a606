//! Compressed-sparse-row operators for Hamiltonians and jump operators.

use super::CMat;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::Cx;

/// Square sparse operator in CSR form with deterministic entry order.
#[derive(Clone, Debug)]
pub struct SparseOp<S: Scalar> {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<Cx<S>>,
}

impl<S: Scalar> SparseOp<S> {
    /// Builds from `(row, col, value)` triplets, summing duplicates and
    /// dropping exact zeros after summation.
    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, Cx<S>)]) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, Cx<S>)> = Vec::with_capacity(triplets.len());
        for &(r, c, v) in triplets {
            if r >= dim || c >= dim {
                return Err(Error::DimensionMismatch { expected: dim, got: r.max(c) + 1 });
            }
            sorted.push((r, c, v));
        }
        sorted.sort_by_key(|&(r, c, _)| (r, c));

        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values = Vec::with_capacity(sorted.len());
        let mut iter = sorted.into_iter().peekable();
        while let Some((r, c, mut v)) = iter.next() {
            while let Some(&(r2, c2, v2)) = iter.peek() {
                if r2 == r && c2 == c {
                    v += v2;
                    iter.next();
                } else {
                    break;
                }
            }
            if v == S::czero() {
                continue;
            }
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(Self { dim, row_ptr, col_idx, values })
    }

    pub fn zeros(dim: usize) -> Self {
        Self { dim, row_ptr: vec![0; dim + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[Cx<S>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Cx<S>] {
        &mut self.values
    }

    /// Iterates stored entries as `(row, col, value)` in CSR order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, Cx<S>)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1])
                .map(move |k| (r, self.col_idx[k], self.values[k]))
        })
    }

    /// `y = A x`.
    pub fn matvec_into(&self, x: &[Cx<S>], y: &mut [Cx<S>]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        for r in 0..self.dim {
            let mut acc = S::czero();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[r] = acc;
        }
    }

    pub fn matvec(&self, x: &[Cx<S>]) -> Vec<Cx<S>> {
        let mut y = vec![S::czero(); self.dim];
        self.matvec_into(x, &mut y);
        y
    }

    /// `y += alpha * A x`.
    pub fn matvec_acc(&self, alpha: Cx<S>, x: &[Cx<S>], y: &mut [Cx<S>]) {
        for r in 0..self.dim {
            let mut acc = S::czero();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[r] += alpha * acc;
        }
    }

    pub fn adjoint(&self) -> Self {
        let triplets: Vec<_> = self.iter().map(|(r, c, v)| (c, r, v.conj())).collect();
        Self::from_triplets(self.dim, &triplets).expect("adjoint preserves dimension")
    }

    pub fn to_dense(&self) -> CMat<S> {
        let mut m = CMat::zeros(self.dim);
        for (r, c, v) in self.iter() {
            m[(r, c)] += v;
        }
        m
    }

    /// Restriction to the index subset `keep`, reindexing entries whose row
    /// and column both survive.
    pub fn restrict(&self, keep: &[usize]) -> Result<Self> {
        let mut map = vec![usize::MAX; self.dim];
        for (new, &old) in keep.iter().enumerate() {
            if old >= self.dim {
                return Err(Error::DimensionMismatch { expected: self.dim, got: old + 1 });
            }
            map[old] = new;
        }
        let triplets: Vec<_> = self
            .iter()
            .filter(|&(r, c, _)| map[r] != usize::MAX && map[c] != usize::MAX)
            .map(|(r, c, v)| (map[r], map[c], v))
            .collect();
        Self::from_triplets(keep.len(), &triplets)
    }

    /// Gershgorin bound on the spectral radius: `max_r sum_c |A_rc|`.
    pub fn gershgorin_bound(&self) -> S {
        let mut bound = S::zero();
        for r in 0..self.dim {
            let mut row_sum = S::zero();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                row_sum += self.values[k].norm();
            }
            bound = bound.max(row_sum);
        }
        bound
    }

    /// Largest entry-wise deviation from `A = A†`.
    pub fn hermiticity_residual(&self) -> S {
        let dense = self.to_dense();
        dense.hermiticity_residual()
    }

    /// `out += alpha * A B` for dense `B`.
    pub fn acc_sparse_dense(&self, alpha: Cx<S>, b: &CMat<S>, out: &mut CMat<S>) {
        debug_assert_eq!(b.dim(), self.dim);
        debug_assert_eq!(out.dim(), self.dim);
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let v = alpha * self.values[k];
                let j = self.col_idx[k];
                let brow: Vec<Cx<S>> = b.row(j).to_vec();
                let orow = out.row_mut(r);
                for (o, bb) in orow.iter_mut().zip(&brow) {
                    *o += v * *bb;
                }
            }
        }
    }

    /// `out += alpha * B A` for dense `B`.
    pub fn acc_dense_sparse(&self, alpha: Cx<S>, b: &CMat<S>, out: &mut CMat<S>) {
        debug_assert_eq!(b.dim(), self.dim);
        debug_assert_eq!(out.dim(), self.dim);
        let n = self.dim;
        for j in 0..n {
            for k in self.row_ptr[j]..self.row_ptr[j + 1] {
                let v = alpha * self.values[k];
                let c = self.col_idx[k];
                for i in 0..n {
                    out[(i, c)] += v * b[(i, j)];
                }
            }
        }
    }
}
