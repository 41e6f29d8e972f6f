//! Small dense helpers over `nalgebra` complex matrices.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type Matrix = DMatrix<Complex64>;
pub type Vector = DVector<Complex64>;

pub(crate) fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Largest absolute entry.
pub fn max_norm(m: &Matrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Spectral norm (largest singular value).
pub fn spectral_norm(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

pub(crate) fn hermitian_part(m: &Matrix) -> Matrix {
    (m + m.adjoint()) * c(0.5)
}

/// Eigendecomposition of the Hermitian part of `m`, eigenvalues ascending.
///
/// Eigenvector phases are fixed so that the largest-modulus component is real
/// and positive, which makes frames reproducible across runs.
pub fn hermitian_eigen(m: &Matrix) -> (Vec<f64>, Matrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), Matrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        fix_phase(&mut v);
        vectors.set_column(col, &v);
    }
    (values, vectors)
}

pub(crate) fn fix_phase(v: &mut Vector) {
    let pivot = v
        .iter()
        .enumerate()
        .fold((0usize, -1.0f64), |best, (i, z)| {
            // Ties go to the earlier index so the choice is stable under rounding.
            if z.norm() > best.1 * (1.0 + 1e-12) {
                (i, z.norm())
            } else {
                best
            }
        })
        .0;
    let z = v[pivot];
    if z.norm() > 0.0 {
        let phase = z.conj() / z.norm();
        *v *= phase;
    }
}

/// Descending singular values.
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Number of singular values above `threshold`.
pub fn numerical_rank(m: &Matrix, threshold: f64) -> usize {
    singular_values(m).into_iter().filter(|&s| s > threshold).count()
}

/// Orthonormal basis of the `dim` right singular directions with smallest
/// singular values.
pub fn null_space(m: &Matrix, dim: usize) -> Vec<Vector> {
    let n = m.ncols();
    if dim == 0 {
        return Vec::new();
    }
    assert_eq!(m.nrows(), n, "null_space expects a square matrix");
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    order
        .into_iter()
        .take(dim.min(n))
        .map(|k| {
            let mut v = v_t.row(k).adjoint();
            fix_phase(&mut v);
            v
        })
        .collect()
}

/// Hermitian square root of a Hermitian positive semidefinite matrix.
/// Eigenvalues below `n·eps·max` are treated as exact zeros.
pub fn psd_sqrt(m: &Matrix) -> Matrix {
    let n = m.nrows();
    let (vals, vecs) = hermitian_eigen(m);
    let top = vals.iter().copied().fold(0.0, f64::max);
    let floor = (n as f64) * f64::EPSILON * top;
    let roots = DVector::from_iterator(
        n,
        vals.iter()
            .map(|&h| if h <= floor { c(0.0) } else { c(h.sqrt()) }),
    );
    &vecs * Matrix::from_diagonal(&roots) * vecs.adjoint()
}

/// `(m^{1/2}, m^{-1/2})` for a Hermitian positive definite matrix.
pub fn pd_sqrt_pair(m: &Matrix) -> Option<(Matrix, Matrix)> {
    let n = m.nrows();
    let (vals, vecs) = hermitian_eigen(m);
    if vals.iter().any(|&h| h <= 0.0) {
        return None;
    }
    let root = DVector::from_iterator(n, vals.iter().map(|&h| c(h.sqrt())));
    let inv_root = DVector::from_iterator(n, vals.iter().map(|&h| c(1.0 / h.sqrt())));
    Some((
        &vecs * Matrix::from_diagonal(&root) * vecs.adjoint(),
        &vecs * Matrix::from_diagonal(&inv_root) * vecs.adjoint(),
    ))
}

/// Columns as a matrix; `n` is needed for the empty case.
pub fn columns(n: usize, vectors: &[Vector]) -> Matrix {
    let mut m = Matrix::zeros(n, vectors.len());
    for (k, v) in vectors.iter().enumerate() {
        m.set_column(k, v);
    }
    m
}

/// Neumaier-compensated sum.
pub fn stable_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psd_sqrt_squares_back() {
        let m = Matrix::from_row_slice(
            2,
            2,
            &[c(2.0), Complex64::new(0.0, 1.0), Complex64::new(0.0, -1.0), c(3.0)],
        );
        let s = psd_sqrt(&m);
        assert!((&s * &s - &m).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn null_space_of_rank_one() {
        let m = Matrix::from_row_slice(2, 2, &[c(1.0), c(1.0), c(1.0), c(1.0)]);
        let ns = null_space(&m, 1);
        assert!((&m * &ns[0]).norm() < 1e-12);
        assert_eq!(numerical_rank(&m, 1e-10), 1);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let s = stable_sum([1e16, 1.0, -1e16]);
        assert_eq!(s, 1.0);
    }
}
