//! Compressed-column storage for the reduced velocity system and its Cholesky solve.

use std::sync::Once;

use faer::prelude::*;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMat};
use faer::{Mat, Par, Side};

use crate::element::N_VEL;
use crate::error::{Error, Result};
use crate::layout::DofLayout;

const UNUSED: usize = usize::MAX;

static SEQUENTIAL: Once = Once::new();

/// Dense kernels run single-threaded so factorizations are reproducible; parallelism
/// is used across independent solves instead.
fn force_sequential() {
    SEQUENTIAL.call_once(|| faer::set_global_parallelism(Par::Seq));
}

/// Full (both triangles) sparsity pattern of the reduced velocity matrix with the
/// scatter map from element matrices to stored entries.
#[derive(Debug, Clone)]
pub struct SparsePattern {
    pub n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    /// `positions[t * N_VEL² + i * N_VEL + j]` is the storage slot of local entry `(i, j)`.
    positions: Vec<usize>,
}

impl SparsePattern {
    pub fn new(layout: &DofLayout) -> Self {
        let n = layout.n_velocity_free();
        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
        let frees: Vec<[Option<usize>; N_VEL]> = (0..layout.n_triangles).map(|t| layout.element_free(t)).collect();
        for f in &frees {
            for j in f.iter().flatten() {
                for i in f.iter().flatten() {
                    cols[*j].push(*i);
                }
            }
        }
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        col_ptr.push(0);
        for c in cols.iter_mut() {
            c.sort_unstable();
            c.dedup();
            row_idx.extend_from_slice(c);
            col_ptr.push(row_idx.len());
        }
        let mut positions = vec![UNUSED; frees.len() * N_VEL * N_VEL];
        for (t, f) in frees.iter().enumerate() {
            for i in 0..N_VEL {
                let Some(gi) = f[i] else { continue };
                for j in 0..N_VEL {
                    let Some(gj) = f[j] else { continue };
                    let rows = &row_idx[col_ptr[gj]..col_ptr[gj + 1]];
                    let k = rows.binary_search(&gi).expect("entry present in pattern");
                    positions[t * N_VEL * N_VEL + i * N_VEL + j] = col_ptr[gj] + k;
                }
            }
        }
        SparsePattern { n, col_ptr, row_idx, positions }
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn zeros(&self) -> Vec<f64> {
        vec![0.0; self.nnz()]
    }

    /// Adds element matrix `local` (row-major `N_VEL × N_VEL`) of triangle `t`.
    pub fn scatter(&self, values: &mut [f64], t: usize, local: &[f64]) {
        let pos = &self.positions[t * N_VEL * N_VEL..(t + 1) * N_VEL * N_VEL];
        for (p, v) in pos.iter().zip(local) {
            if *p != UNUSED {
                values[*p] += v;
            }
        }
    }

    pub fn matvec(&self, values: &[f64], x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for j in 0..self.n {
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                y[self.row_idx[k]] += values[k] * x[j];
            }
        }
        y
    }

    /// Entry `(i, j)`, zero outside the pattern.
    pub fn get(&self, values: &[f64], i: usize, j: usize) -> f64 {
        let rows = &self.row_idx[self.col_ptr[j]..self.col_ptr[j + 1]];
        rows.binary_search(&i).map(|k| values[self.col_ptr[j] + k]).unwrap_or(0.0)
    }

    /// Largest `|A_ij - A_ji|` over the stored entries.
    pub fn max_asymmetry(&self, values: &[f64]) -> f64 {
        let mut m: f64 = 0.0;
        for j in 0..self.n {
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                let i = self.row_idx[k];
                m = m.max((values[k] - self.get(values, j, i)).abs());
            }
        }
        m
    }

    fn symbolic(&self) -> SymbolicSparseColMat<usize> {
        SymbolicSparseColMat::new_checked(self.n, self.n, self.col_ptr.clone(), None, self.row_idx.clone())
    }
}

/// Symbolic Cholesky analysis shared by all factorizations on one pattern.
#[derive(Debug, Clone)]
pub struct SymmetricSolver {
    symbolic_matrix: SymbolicSparseColMat<usize>,
    symbolic: SymbolicLlt<usize>,
}

pub struct Factorization {
    llt: Llt<usize, f64>,
}

impl SymmetricSolver {
    pub fn new(pattern: &SparsePattern) -> Result<Self> {
        force_sequential();
        let symbolic_matrix = pattern.symbolic();
        let symbolic = SymbolicLlt::try_new(symbolic_matrix.as_ref(), Side::Lower)
            .map_err(|e| Error::LinearSolveFailed(format!("symbolic analysis: {e:?}")))?;
        Ok(SymmetricSolver { symbolic_matrix, symbolic })
    }

    pub fn factor(&self, values: &[f64]) -> Result<Factorization> {
        let mat = SparseColMatRef::new(self.symbolic_matrix.as_ref(), values);
        let llt = Llt::try_new_with_symbolic(self.symbolic.clone(), mat, Side::Lower)
            .map_err(|e| Error::LinearSolveFailed(format!("Cholesky factorization: {e:?}")))?;
        Ok(Factorization { llt })
    }
}

impl Factorization {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut b = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        self.llt.solve_in_place(b.as_mut());
        (0..rhs.len()).map(|i| b[(i, 0)]).collect()
    }
}
