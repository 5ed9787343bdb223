//! Dense symmetric linear algebra, backed by faer and pinned to sequential
//! execution so results do not depend on thread count.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self, ComputeEigenvectors};
use faer::linalg::matmul::matmul;
use faer::diag::Diag;
use faer::{Accum, Mat, MatRef, Par, Spec};

use crate::{Error, Result};

/// `alpha * Y^T Y` for row-major `y` (rows x cols); returns cols x cols row-major.
pub(super) fn gram_transpose(y: &[f64], rows: usize, cols: usize, alpha: f64) -> Vec<f64> {
    // row-major rows x cols == column-major cols x rows, i.e. Y^T
    let yt = MatRef::from_column_major_slice(y, cols, rows);
    let mut out = Mat::<f64>::zeros(cols, cols);
    matmul(out.as_mut(), Accum::Replace, yt, yt.transpose(), alpha, Par::Seq);
    let mut flat = vec![0.0; cols * cols];
    for i in 0..cols {
        for j in 0..cols {
            // symmetrize away rounding differences between the two triangles
            flat[i * cols + j] = 0.5 * (out[(i, j)] + out[(j, i)]);
        }
    }
    flat
}

/// Eigen-decomposition of a symmetric row-major matrix. Eigenvalues descending,
/// eigenvectors returned one per entry.
pub(super) fn symmetric_eigen(a: Vec<f64>, n: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let mat = MatRef::from_row_major_slice(&a, n, n);
    let mut s = Diag::<f64>::zeros(n);
    let mut u = Mat::<f64>::zeros(n, n);
    let req = evd::self_adjoint_evd_scratch::<f64>(n, ComputeEigenvectors::Yes, Par::Seq, Spec::default());
    let mut mem = MemBuffer::new(req);
    evd::self_adjoint_evd(
        mat,
        s.as_mut(),
        Some(u.as_mut()),
        Par::Seq,
        MemStack::new(&mut mem),
        Spec::default(),
    )
    .map_err(|e| Error::Fit(format!("eigendecomposition did not converge: {e:?}")))?;
    let values = s.column_vector();
    let order: Vec<usize> = (0..n).rev().collect();
    let vals = order.iter().map(|&k| values[k]).collect();
    let vecs = order
        .iter()
        .map(|&k| (0..n).map(|i| u[(i, k)]).collect())
        .collect();
    Ok((vals, vecs))
}
