//! Indefinite-metric linear algebra on `C^n` with `[x, y] = Σ s_i x_i conj(y_i)`.
//!
//! The fundamental symmetry `J = diag(s)` is always diagonal with entries `±1`,
//! so `J² = I` holds exactly and applying `J` never rounds.

use nalgebra::Cholesky;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{KreinError, Result};
use crate::linalg::{self, c, Matrix, Vector};

/// Default relative tolerance for structural checks.
pub const DEFAULT_TOL: f64 = 1e-10;

/// `C^n` with the indefinite inner product induced by a signature.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct KreinSpace {
    signature: Vec<i8>,
}

impl TryFrom<Vec<i8>> for KreinSpace {
    type Error = KreinError;

    fn try_from(signature: Vec<i8>) -> Result<Self> {
        Self::new(signature)
    }
}

impl From<KreinSpace> for Vec<i8> {
    fn from(space: KreinSpace) -> Self {
        space.signature
    }
}

impl KreinSpace {
    pub fn new(signature: Vec<i8>) -> Result<Self> {
        if signature.is_empty() || signature.iter().any(|&s| s != 1 && s != -1) {
            return Err(KreinError::InvalidSignature);
        }
        Ok(Self { signature })
    }

    /// The Hilbert case `J = I`.
    pub fn hilbert(n: usize) -> Result<Self> {
        Self::new(vec![1; n])
    }

    /// `plus` positive axes followed by `minus` negative ones.
    pub fn with_counts(plus: usize, minus: usize) -> Result<Self> {
        let mut signature = vec![1; plus];
        signature.extend(std::iter::repeat_n(-1, minus));
        Self::new(signature)
    }

    pub fn dim(&self) -> usize {
        self.signature.len()
    }

    pub fn signature(&self) -> &[i8] {
        &self.signature
    }

    pub fn plus_count(&self) -> usize {
        self.signature.iter().filter(|&&s| s > 0).count()
    }

    pub fn minus_count(&self) -> usize {
        self.dim() - self.plus_count()
    }

    /// True when `J = I`.
    pub fn is_hilbert(&self) -> bool {
        self.signature.iter().all(|&s| s > 0)
    }

    /// Same space with the inner product `-[·,·]`.
    pub fn flipped(&self) -> Self {
        Self {
            signature: self.signature.iter().map(|&s| -s).collect(),
        }
    }

    pub fn fundamental_symmetry(&self) -> Matrix {
        Matrix::from_diagonal(&Vector::from_iterator(
            self.dim(),
            self.signature.iter().map(|&s| c(s as f64)),
        ))
    }

    pub fn apply_j(&self, v: &Vector) -> Vector {
        Vector::from_iterator(
            v.len(),
            v.iter().zip(&self.signature).map(|(z, &s)| if s > 0 { *z } else { -*z }),
        )
    }

    /// `J · m` (row scaling).
    pub fn j_left(&self, m: &Matrix) -> Matrix {
        let mut out = m.clone();
        for (i, &s) in self.signature.iter().enumerate() {
            if s < 0 {
                out.row_mut(i).neg_mut();
            }
        }
        out
    }

    /// `m · J` (column scaling).
    pub fn j_right(&self, m: &Matrix) -> Matrix {
        let mut out = m.clone();
        for (i, &s) in self.signature.iter().enumerate() {
            if s < 0 {
                out.column_mut(i).neg_mut();
            }
        }
        out
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(KreinError::DimensionMismatch {
                expected: self.dim(),
                found: len,
            });
        }
        Ok(())
    }

    /// `[x, y]`, linear in `x` and conjugate-linear in `y`.
    pub fn inner(&self, x: &Vector, y: &Vector) -> Result<Complex64> {
        self.check_len(x.len())?;
        self.check_len(y.len())?;
        Ok(self.inner_unchecked(x, y))
    }

    pub(crate) fn inner_unchecked(&self, x: &Vector, y: &Vector) -> Complex64 {
        x.iter()
            .zip(y.iter())
            .zip(&self.signature)
            .map(|((a, b), &s)| {
                let p = a * b.conj();
                if s > 0 {
                    p
                } else {
                    -p
                }
            })
            .sum()
    }

    /// `[x, x]`, which is always real.
    pub(crate) fn quad(&self, x: &Vector) -> f64 {
        x.iter()
            .zip(&self.signature)
            .map(|(a, &s)| (s as f64) * a.norm_sqr())
            .sum()
    }
}

/// Free-function form of [`KreinSpace::inner`].
pub fn inner(x: &Vector, y: &Vector, space: &KreinSpace) -> Result<Complex64> {
    space.inner(x, y)
}

/// A square complex matrix acting on a [`KreinSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    entries: Matrix,
    space: KreinSpace,
}

impl DenseOperator {
    pub fn new(entries: Matrix, space: KreinSpace) -> Result<Self> {
        let n = space.dim();
        if entries.nrows() != n {
            return Err(KreinError::DimensionMismatch {
                expected: n,
                found: entries.nrows(),
            });
        }
        if entries.ncols() != n {
            return Err(KreinError::DimensionMismatch {
                expected: n,
                found: entries.ncols(),
            });
        }
        Ok(Self { entries, space })
    }

    /// Real matrix given row-major.
    pub fn from_real(space: KreinSpace, rows: &[f64]) -> Result<Self> {
        let n = space.dim();
        if rows.len() != n * n {
            return Err(KreinError::DimensionMismatch {
                expected: n * n,
                found: rows.len(),
            });
        }
        let entries = Matrix::from_iterator(n, n, (0..n * n).map(|k| c(rows[(k % n) * n + k / n])));
        Self::new(entries, space)
    }

    pub fn zero(space: KreinSpace) -> Self {
        let n = space.dim();
        Self {
            entries: Matrix::zeros(n, n),
            space,
        }
    }

    pub fn identity(space: KreinSpace) -> Self {
        let n = space.dim();
        Self {
            entries: Matrix::identity(n, n),
            space,
        }
    }

    pub fn diagonal(space: KreinSpace, diag: &[f64]) -> Result<Self> {
        let n = space.dim();
        if diag.len() != n {
            return Err(KreinError::DimensionMismatch {
                expected: n,
                found: diag.len(),
            });
        }
        let d = Vector::from_iterator(n, diag.iter().map(|&x| c(x)));
        Self::new(Matrix::from_diagonal(&d), space)
    }

    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    pub fn into_entries(self) -> Matrix {
        self.entries
    }

    pub fn space(&self) -> &KreinSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        &self.entries * x
    }

    /// `J T`, Hermitian exactly when `T` is Krein-selfadjoint.
    pub fn j_times(&self) -> Matrix {
        self.space.j_left(&self.entries)
    }

    pub fn max_norm(&self) -> f64 {
        linalg::max_norm(&self.entries)
    }

    pub fn norm(&self) -> f64 {
        linalg::spectral_norm(&self.entries)
    }

    /// `self + t · other`; both must act on the same space.
    pub fn add_scaled(&self, t: f64, other: &DenseOperator) -> Result<Self> {
        if self.space != other.space {
            return Err(KreinError::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(Self {
            entries: &self.entries + &other.entries * c(t),
            space: self.space.clone(),
        })
    }

    /// `s · T` on the same space.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            entries: &self.entries * c(s),
            space: self.space.clone(),
        }
    }

    /// Same matrix, reinterpreted on another space of equal dimension.
    pub fn with_space(&self, space: KreinSpace) -> Result<Self> {
        Self::new(self.entries.clone(), space)
    }

    pub fn adjoint(&self) -> Self {
        adjoint(self)
    }
}

/// Krein adjoint `T⁺ = J T* J`.
pub fn adjoint(t: &DenseOperator) -> DenseOperator {
    let space = &t.space;
    DenseOperator {
        entries: space.j_right(&space.j_left(&t.entries.adjoint())),
        space: space.clone(),
    }
}

fn scale_of(t: &DenseOperator) -> f64 {
    t.max_norm().max(1.0)
}

/// `JT` Hermitian to within `tol` (relative to `max(‖T‖_max, 1)`).
pub fn is_selfadjoint(t: &DenseOperator, tol: f64) -> bool {
    let jt = t.j_times();
    let skew = linalg::max_norm(&(&jt - jt.adjoint()));
    skew <= tol * scale_of(t)
}

/// Outcome of [`is_nonnegative`] with the smallest eigenvalue of `JT`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonnegativityCertificate {
    pub nonnegative: bool,
    pub selfadjoint: bool,
    /// `λ_min` of the Hermitian part of `JT`.
    pub lambda_min: f64,
}

impl NonnegativityCertificate {
    pub fn holds(&self) -> bool {
        self.nonnegative
    }
}

/// `[Tx, x] >= 0` for all `x`, i.e. `JT` Hermitian positive semidefinite.
pub fn is_nonnegative(t: &DenseOperator, tol: f64) -> NonnegativityCertificate {
    let selfadjoint = is_selfadjoint(t, tol);
    let (vals, _) = linalg::hermitian_eigen(&t.j_times());
    let lambda_min = vals.first().copied().unwrap_or(0.0);
    NonnegativityCertificate {
        nonnegative: selfadjoint && lambda_min >= -tol * scale_of(t),
        selfadjoint,
        lambda_min,
    }
}

/// Gram–Schmidt in the indefinite metric.
///
/// Returns `u_k` with `[u_k, u_l] = signs_k δ_kl`. Each vector is projected
/// twice against the already accepted family; a neutral remainder
/// (`|[u,u]| <= tol·‖u‖²`) is an error.
pub fn j_orthonormalize(
    vectors: &[Vector],
    space: &KreinSpace,
    tol: f64,
) -> Result<(Vec<Vector>, Vec<i8>)> {
    let mut family: Vec<Vector> = Vec::with_capacity(vectors.len());
    let mut signs: Vec<i8> = Vec::with_capacity(vectors.len());
    for (index, v) in vectors.iter().enumerate() {
        if v.len() != space.dim() {
            return Err(KreinError::DimensionMismatch {
                expected: space.dim(),
                found: v.len(),
            });
        }
        let mut u = v.clone();
        for _ in 0..2 {
            for (q, &s) in family.iter().zip(&signs) {
                let coeff = space.inner_unchecked(&u, q) * (s as f64);
                u -= q * coeff;
            }
        }
        let value = space.quad(&u);
        let norm_sq = u.norm_squared();
        if value.abs() <= tol * norm_sq || norm_sq == 0.0 {
            return Err(KreinError::DegenerateSubspace { index, value });
        }
        u /= c(value.abs().sqrt());
        family.push(u);
        signs.push(if value > 0.0 { 1 } else { -1 });
    }
    Ok((family, signs))
}

/// Sign pattern of the `[·,·]`-Gram of a subspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Definiteness {
    UniformlyPositive,
    UniformlyNegative,
    Indefinite,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GramReport {
    pub classification: Definiteness,
    /// Smallest `|λ|` over the Gram spectrum; equals `λ_min` in the
    /// uniformly positive case.
    pub delta: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `[·,·]`-Gram of an ĥ-orthonormal basis of the subspace.
    pub gram: Matrix,
}

/// A Hilbert norm `ĥ(x, y) = [Ĵx, y]` from a fundamental symmetry `Ĵ`.
#[derive(Debug, Clone)]
pub struct HilbertNorm {
    space: KreinSpace,
    symmetry: Matrix,
    /// Hermitian matrix `G = JĴ` with `ĥ(x, y) = y* G x`.
    gram: Matrix,
    root: Matrix,
    inv_root: Matrix,
}

impl HilbertNorm {
    pub fn new(space: &KreinSpace, symmetry: &DenseOperator) -> Result<Self> {
        let n = space.dim();
        if symmetry.dim() != n {
            return Err(KreinError::DimensionMismatch {
                expected: n,
                found: symmetry.dim(),
            });
        }
        let s = symmetry.entries();
        let square_err = linalg::max_norm(&(s * s - Matrix::identity(n, n)));
        if square_err > 1e-8 * s.norm().max(1.0).powi(2) {
            return Err(KreinError::NotFundamentalSymmetry(format!(
                "|Ĵ² - I|_max = {square_err:e}"
            )));
        }
        let g = space.j_left(s);
        let herm_err = linalg::max_norm(&(&g - g.adjoint()));
        if herm_err > 1e-8 * linalg::max_norm(&g).max(1.0) {
            return Err(KreinError::NotFundamentalSymmetry(format!(
                "JĴ is not Hermitian (skew {herm_err:e})"
            )));
        }
        let g = linalg::hermitian_part(&g);
        let (root, inv_root) = linalg::pd_sqrt_pair(&g).ok_or_else(|| {
            KreinError::NotFundamentalSymmetry("[Ĵ·,·] is not positive definite".into())
        })?;
        Ok(Self {
            space: space.clone(),
            symmetry: s.clone(),
            gram: g,
            root,
            inv_root,
        })
    }

    /// The norm induced by `J` itself (the Euclidean norm in these coordinates).
    pub fn standard(space: &KreinSpace) -> Self {
        let n = space.dim();
        Self {
            space: space.clone(),
            symmetry: space.fundamental_symmetry(),
            gram: Matrix::identity(n, n),
            root: Matrix::identity(n, n),
            inv_root: Matrix::identity(n, n),
        }
    }

    pub fn symmetry(&self) -> &Matrix {
        &self.symmetry
    }

    pub fn gram_matrix(&self) -> &Matrix {
        &self.gram
    }

    pub fn norm_sq(&self, x: &Vector) -> f64 {
        (x.adjoint() * &self.gram * x)[(0, 0)].re
    }

    /// Operator norm induced by ĥ: `‖G^{1/2} T G^{-1/2}‖₂`.
    pub fn operator_norm(&self, t: &Matrix) -> f64 {
        linalg::spectral_norm(&(&self.root * t * &self.inv_root))
    }

    /// Smallest eigenvalue of the ĥ-orthonormalized `[·,·]`-Gram of `basis`.
    pub fn gram_report(&self, basis: &[Vector], tol: f64) -> Result<GramReport> {
        let n = self.space.dim();
        for v in basis {
            if v.len() != n {
                return Err(KreinError::DimensionMismatch {
                    expected: n,
                    found: v.len(),
                });
            }
        }
        let b = linalg::columns(n, basis);
        let k = basis.len();
        if k == 0 {
            return Ok(GramReport {
                classification: Definiteness::Degenerate,
                delta: 0.0,
                lambda_min: 0.0,
                lambda_max: 0.0,
                gram: Matrix::zeros(0, 0),
            });
        }
        let definite = self.space.is_hilbert() || self.space.flipped().is_hilbert();
        if definite && self.symmetry == self.space.fundamental_symmetry() {
            // [·,·] = ±ĥ, so the Gram of any ĥ-orthonormal basis is ±I.
            let s = self.space.signature()[0] as f64;
            let (classification, value) = if s > 0.0 {
                (Definiteness::UniformlyPositive, 1.0)
            } else {
                (Definiteness::UniformlyNegative, -1.0)
            };
            return Ok(GramReport {
                classification,
                delta: 1.0,
                lambda_min: value,
                lambda_max: value,
                gram: Matrix::identity(k, k) * c(value),
            });
        }
        let metric = linalg::hermitian_part(&(b.adjoint() * &self.gram * &b));
        let krein = linalg::hermitian_part(&(b.adjoint() * self.space.j_left(&b)));
        let chol = Cholesky::new(metric).ok_or_else(|| {
            KreinError::InvalidConfig("basis vectors are linearly dependent".into())
        })?;
        let l = chol.l();
        // L⁻¹ K L⁻*
        let left = l
            .solve_lower_triangular(&krein)
            .expect("Cholesky factor is nonsingular");
        let gram = l
            .solve_lower_triangular(&left.adjoint())
            .expect("Cholesky factor is nonsingular")
            .adjoint();
        let gram = linalg::hermitian_part(&gram);
        let (vals, _) = linalg::hermitian_eigen(&gram);
        let lambda_min = vals[0];
        let lambda_max = vals[k - 1];
        let delta = vals.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
        let classification = if lambda_min > tol {
            Definiteness::UniformlyPositive
        } else if lambda_max < -tol {
            Definiteness::UniformlyNegative
        } else if delta <= tol {
            Definiteness::Degenerate
        } else {
            Definiteness::Indefinite
        };
        Ok(GramReport {
            classification,
            delta,
            lambda_min,
            lambda_max,
            gram,
        })
    }
}

/// Definiteness of `span(basis)` measured in the norm `[Ĵ·,·]`.
pub fn gram_definiteness(
    basis: &[Vector],
    space: &KreinSpace,
    norm_symmetry: &DenseOperator,
    tol: f64,
) -> Result<GramReport> {
    HilbertNorm::new(space, norm_symmetry)?.gram_report(basis, tol)
}
