use nalgebra::SymmetricEigen;

use super::{CMatrix, C64};

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
///
/// Column `k` of the returned matrix is the eigenvector for value `k`.
/// nalgebra reduces to real tridiagonal form and runs implicit QR, which is
/// more than adequate at the 2×2 and 4×4 sizes used here.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vecs = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

/// Principal square root of a positive semi-definite Hermitian matrix.
/// Slightly negative eigenvalues are clipped to zero.
pub fn hermitian_sqrt(m: &CMatrix) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(m);
    let n = m.nrows();
    let mut out = CMatrix::zeros(n, n);
    for (k, &lam) in vals.iter().enumerate() {
        let root = lam.max(0.0).sqrt();
        if root == 0.0 {
            continue;
        }
        let v = vecs.column(k);
        out += (v * v.adjoint()) * C64::new(root, 0.0);
    }
    out
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}
