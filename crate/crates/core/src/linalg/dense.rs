use nalgebra::{DMatrix, SymmetricEigen};

use crate::Real;

/// Full eigendecomposition with eigenvalues in ascending order.
#[derive(Debug, Clone)]
pub struct DenseEigen<T: Real> {
    pub values: Vec<T>,
    /// Eigenvectors as columns, in the same order as `values`.
    pub vectors: DMatrix<T>,
}

pub fn sorted_symmetric_eigen<T: Real>(m: DMatrix<T>) -> DenseEigen<T> {
    let n = m.nrows();
    if n == 0 {
        return DenseEigen { values: Vec::new(), vectors: DMatrix::zeros(0, 0) };
    }
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    DenseEigen { values, vectors }
}
