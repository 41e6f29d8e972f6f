//! Spectral decomposition of non-negative operators, spectral projections,
//! spectral types, the regularity test at the critical point 0, the adapted
//! fundamental symmetry of the perturbation and the uniform definiteness
//! constant δ of the spectral subspaces `E_{A(t)}([a, ∞))`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{KreinError, Result};
use crate::krein::{is_nonnegative, DenseOperator, HilbertNorm, KreinSpace};
use crate::linalg::{self, c, Matrix, Vector};

/// Relative gap below which eigenvalues are merged into one cluster.
pub const CLUSTER_REL_TOL: f64 = 1e-8;
/// Relative residual above which an eigenpair is rejected.
pub const RESIDUAL_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectralType {
    PositiveType,
    NegativeType,
    Neutral,
}

/// An open real interval `(lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(KreinError::InvalidConfig(format!(
                "interval ({lo}, {hi}) must be finite with lo < hi"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }

    /// `0 ∈ [lo, hi]`.
    pub fn closure_contains_zero(&self) -> bool {
        self.lo <= 0.0 && 0.0 <= self.hi
    }

    pub fn negated(&self) -> Self {
        Self {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

/// One eigenvalue (cluster) with a J-orthonormal frame of its eigenspace.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigencluster {
    pub value: f64,
    pub multiplicity: usize,
    pub frame: Vec<Vector>,
    /// `[x_k, x_k]` for each frame vector.
    pub signs: Vec<i8>,
    pub kind: SpectralType,
}

impl Eigencluster {
    /// Krein-selfadjoint eigenprojection `Σ_k s_k x_k (J x_k)*`.
    pub fn projection(&self, space: &KreinSpace) -> Matrix {
        frame_projection(space, &self.frame, &self.signs)
    }
}

pub(crate) fn frame_projection(space: &KreinSpace, frame: &[Vector], signs: &[i8]) -> Matrix {
    let n = space.dim();
    let mut p = Matrix::zeros(n, n);
    for (x, &s) in frame.iter().zip(signs) {
        let jx = space.apply_j(x);
        p += x * jx.adjoint() * c(s as f64);
    }
    p
}

/// Real spectrum of a non-negative operator.
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub space: KreinSpace,
    /// Nonzero eigenvalues, ascending.
    pub clusters: Vec<Eigencluster>,
    /// Algebraic multiplicity of the eigenvalue 0.
    pub zero_dim: usize,
    /// Orthonormal basis of `ker A` (geometric kernel).
    pub kernel: Vec<Vector>,
    /// Spectral norm of the operator.
    pub scale: f64,
    pub cluster_tol: f64,
    pub max_residual: f64,
}

impl SpectrumReport {
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.clusters.iter().map(|k| k.value).collect()
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.clusters.iter().map(|k| k.multiplicity).collect()
    }

    /// Nonzero eigenvalues repeated by multiplicity, ascending.
    pub fn eigenvalues_with_multiplicity(&self) -> Vec<f64> {
        self.clusters
            .iter()
            .flat_map(|k| std::iter::repeat_n(k.value, k.multiplicity))
            .collect()
    }

    pub fn find(&self, value: f64) -> Option<&Eigencluster> {
        let tol = self.cluster_tol.max(1e-12 * value.abs().max(1.0));
        self.clusters
            .iter()
            .filter(|k| (k.value - value).abs() <= tol)
            .min_by(|a, b| (a.value - value).abs().total_cmp(&(b.value - value).abs()))
    }

    /// Frames of all eigenvalues accepted by `keep`.
    pub fn frames_where(&self, keep: impl Fn(f64) -> bool) -> Vec<Vector> {
        self.clusters
            .iter()
            .filter(|k| keep(k.value))
            .flat_map(|k| k.frame.iter().cloned())
            .collect()
    }

    /// Sum of eigenprojections of eigenvalues accepted by `keep`.
    pub fn projection_where(&self, keep: impl Fn(f64) -> bool) -> Matrix {
        let n = self.space.dim();
        self.clusters
            .iter()
            .filter(|k| keep(k.value))
            .fold(Matrix::zeros(n, n), |acc, k| acc + k.projection(&self.space))
    }
}

fn classify_frame(space: &KreinSpace, frame: &[Vector], tol: f64) -> SpectralType {
    let gram = Matrix::from_fn(frame.len(), frame.len(), |i, j| {
        space.inner_unchecked(&frame[j], &frame[i])
    });
    let (vals, _) = linalg::hermitian_eigen(&gram);
    match (vals.first(), vals.last()) {
        (Some(&lo), _) if lo > tol => SpectralType::PositiveType,
        (_, Some(&hi)) if hi < -tol => SpectralType::NegativeType,
        _ => SpectralType::Neutral,
    }
}

/// Eigenvalues and J-orthonormal eigenframes of a non-negative operator.
///
/// With `H = JA ≥ 0` and `S = H^{1/2}`, the Hermitian matrix `W = S J S` has the
/// same nonzero eigenvalues as `A`; an eigenpair `(μ, w)` of `W` yields the
/// eigenvector `J S w / √|μ|` of `A`, whose `[·,·]`-norm is `sign μ`.
pub fn eigen_nonnegative(a: &DenseOperator, tol: f64) -> Result<SpectrumReport> {
    let cert = is_nonnegative(a, tol);
    if !cert.holds() {
        return Err(KreinError::NotNonnegative {
            lambda_min: cert.lambda_min,
            selfadjoint: cert.selfadjoint,
        });
    }
    let space = a.space();
    let n = space.dim();
    let scale = a.norm();
    let h = linalg::hermitian_part(&a.j_times());
    let s = linalg::psd_sqrt(&h);
    let w = linalg::hermitian_part(&(&s * space.j_left(&s)));
    let (mus, ws) = linalg::hermitian_eigen(&w);

    let zero_tol = tol * scale;
    let cluster_tol = CLUSTER_REL_TOL * scale;
    let js = space.j_left(&s);
    let mut pairs: Vec<(f64, Vector)> = Vec::new();
    let mut max_residual = 0.0f64;
    for (k, &mu) in mus.iter().enumerate() {
        if mu.abs() <= zero_tol {
            continue;
        }
        let mut x = &js * ws.column(k) / c(mu.abs().sqrt());
        linalg::fix_phase(&mut x);
        let ax = a.apply(&x);
        let rq = space.inner_unchecked(&ax, &x).re / space.quad(&x);
        let mu = if rq.signum() == mu.signum() { rq } else { mu };
        let residual = (ax - &x * c(mu)).norm() / x.norm();
        max_residual = max_residual.max(residual);
        let limit = RESIDUAL_REL_TOL * scale;
        if residual > limit {
            return Err(KreinError::IllConditioned { residual, limit });
        }
        pairs.push((mu, x));
    }

    pairs.sort_by(|l, r| l.0.total_cmp(&r.0));
    let mut clusters: Vec<Eigencluster> = Vec::new();
    let mut members: Vec<(f64, Vector)> = Vec::new();
    let flush = |members: &mut Vec<(f64, Vector)>, clusters: &mut Vec<Eigencluster>| {
        if members.is_empty() {
            return;
        }
        let value = members.iter().map(|m| m.0).sum::<f64>() / members.len() as f64;
        let frame: Vec<Vector> = members.drain(..).map(|m| m.1).collect();
        let signs = vec![if value > 0.0 { 1 } else { -1 }; frame.len()];
        let kind = classify_frame(space, &frame, 1e-8);
        clusters.push(Eigencluster {
            value,
            multiplicity: frame.len(),
            frame,
            signs,
            kind,
        });
    };
    for (mu, x) in pairs {
        let same = members
            .last()
            .is_some_and(|(prev, _)| (mu - prev).abs() <= cluster_tol && prev.signum() == mu.signum());
        if !same {
            flush(&mut members, &mut clusters);
        }
        members.push((mu, x));
    }
    flush(&mut members, &mut clusters);

    let nonzero: usize = clusters.iter().map(|k| k.multiplicity).sum();
    let zero_dim = n - nonzero;
    let kernel_dim = n - linalg::numerical_rank(a.entries(), tol * scale.max(f64::MIN_POSITIVE));
    let kernel = if scale == 0.0 {
        (0..n)
            .map(|i| {
                let mut e = Vector::zeros(n);
                e[i] = c(1.0);
                e
            })
            .collect()
    } else {
        linalg::null_space(a.entries(), kernel_dim)
    };
    Ok(SpectrumReport {
        space: space.clone(),
        clusters,
        zero_dim,
        kernel,
        scale,
        cluster_tol,
        max_residual,
    })
}

/// `E(Δ)` for an interval avoiding 0.
#[derive(Debug, Clone)]
pub struct SpectralProjection {
    pub matrix: DenseOperator,
    pub interval: Interval,
}

pub fn spectral_projection(report: &SpectrumReport, interval: Interval) -> Result<SpectralProjection> {
    if interval.closure_contains_zero() {
        return Err(KreinError::IntervalTouchesZero {
            lo: interval.lo,
            hi: interval.hi,
        });
    }
    let tol = report.cluster_tol.max(f64::EPSILON);
    if let Some(k) = report
        .clusters
        .iter()
        .find(|k| (k.value - interval.lo).abs() <= tol || (k.value - interval.hi).abs() <= tol)
    {
        return Err(KreinError::EigenvalueOnBoundary { value: k.value });
    }
    let p = report.projection_where(|v| interval.contains(v));
    Ok(SpectralProjection {
        matrix: DenseOperator::new(p, report.space.clone())?,
        interval,
    })
}

/// Spectral type of an eigenvalue from the sign of its eigenframe Gram.
pub fn classify_point(report: &SpectrumReport, eigenvalue: f64) -> Result<SpectralType> {
    let k = report
        .find(eigenvalue)
        .ok_or(KreinError::EigenvalueNotFound { value: eigenvalue })?;
    Ok(classify_frame(&report.space, &k.frame, 1e-8))
}

/// `(rank C, rank C²)` with singular values `<= tol·σ_max(C)^k` counted as zero.
pub fn regularity_ranks(c_op: &DenseOperator, tol: f64) -> (usize, usize) {
    let m = c_op.entries();
    let top = linalg::spectral_norm(m);
    if top == 0.0 {
        return (0, 0);
    }
    let rank_c = linalg::numerical_rank(m, tol * top);
    let rank_c2 = linalg::numerical_rank(&(m * m), tol * top * top);
    (rank_c, rank_c2)
}

/// `rank C = rank C²`, i.e. `ker C = ker C²`: at finite dimension this is
/// exactly the condition that 0 is not a singular critical point of `C`.
pub fn regularity_check(c_op: &DenseOperator, tol: f64) -> bool {
    let (r1, r2) = regularity_ranks(c_op, tol);
    r1 == r2
}

/// J-orthonormal eigenbasis of a regular non-negative `C`: eigenvectors for
/// the nonzero eigenvalues followed by a fundamental decomposition of `ker C`.
#[derive(Debug, Clone)]
pub(crate) struct KreinDecomposition {
    /// `(γ_l, φ_l)` with `[φ_l, φ_l] = sign γ_l`.
    pub range: Vec<(f64, Vector)>,
    /// `(sign, z)` with `[z, z] = sign`.
    pub kernel: Vec<(i8, Vector)>,
}

pub(crate) fn krein_decomposition(c_op: &DenseOperator, tol: f64) -> Result<KreinDecomposition> {
    let cert = is_nonnegative(c_op, tol);
    if !cert.holds() {
        return Err(KreinError::NotNonnegative {
            lambda_min: cert.lambda_min,
            selfadjoint: cert.selfadjoint,
        });
    }
    let (rank_c, rank_c2) = regularity_ranks(c_op, tol);
    if rank_c != rank_c2 {
        return Err(KreinError::RegularityViolated { rank_c, rank_c2 });
    }
    let space = c_op.space();
    let n = space.dim();
    let report = eigen_nonnegative(c_op, tol)?;
    let top = report.clusters.iter().map(|k| k.value.abs()).fold(0.0, f64::max);
    let range: Vec<(f64, Vector)> = report
        .clusters
        .iter()
        .filter(|k| k.value.abs() > tol * top)
        .flat_map(|k| k.frame.iter().map(move |x| (k.value, x.clone())))
        .collect();

    let kernel_dim = n - range.len();
    let y = linalg::columns(n, &linalg::null_space(c_op.entries(), kernel_dim));
    let ker_gram = y.adjoint() * space.j_left(&y);
    let (vals, q) = linalg::hermitian_eigen(&ker_gram);
    let mut kernel = Vec::with_capacity(kernel_dim);
    for (i, &lam) in vals.iter().enumerate() {
        if lam.abs() <= tol {
            return Err(KreinError::DegenerateKernel { value: lam.abs() });
        }
        let mut z = &y * q.column(i) / c(lam.abs().sqrt());
        linalg::fix_phase(&mut z);
        kernel.push((if lam > 0.0 { 1 } else { -1 }, z));
    }
    // Positive part of the kernel first.
    kernel.sort_by_key(|(s, _)| -*s);
    Ok(KreinDecomposition { range, kernel })
}

/// Fundamental symmetry `Ĵ` adapted to `C`: `+1` on eigenvectors with `γ > 0`
/// and on the positive part of `ker C`, `-1` on the rest.
pub fn adapted_symmetry(c_op: &DenseOperator, tol: f64) -> Result<DenseOperator> {
    let space = c_op.space();
    if space.is_hilbert() || space.flipped().is_hilbert() {
        // Validates the hypotheses on C.
        krein_decomposition(c_op, tol)?;
        return DenseOperator::new(space.fundamental_symmetry(), space.clone());
    }
    let dec = krein_decomposition(c_op, tol)?;
    Ok(symmetry_from_decomposition(space, &dec))
}

pub(crate) fn symmetry_from_decomposition(space: &KreinSpace, dec: &KreinDecomposition) -> DenseOperator {
    let n = space.dim();
    let vectors: Vec<Vector> = dec
        .range
        .iter()
        .map(|(_, v)| v.clone())
        .chain(dec.kernel.iter().map(|(_, z)| z.clone()))
        .collect();
    let u = linalg::columns(n, &vectors);
    // Ĵ u_k = s_k u_k with U* J U = S gives Ĵ = U U* J.
    let jhat = space.j_right(&(&u * u.adjoint()));
    DenseOperator::new(jhat, space.clone()).expect("square by construction")
}

/// Smallest `[·,·]`-Gram eigenvalue (in the norm `norm`) of the span of the
/// eigenvectors with eigenvalue `>= a`; `None` when that span is empty.
pub fn subspace_definiteness(report: &SpectrumReport, a: f64, norm: &HilbertNorm) -> Result<Option<f64>> {
    let basis = report.frames_where(|v| v >= a);
    if basis.is_empty() {
        return Ok(None);
    }
    Ok(Some(norm.gram_report(&basis, 1e-10)?.lambda_min))
}

/// Uniform definiteness constant of `E_{A(t)}([a, ∞))` over a t-grid,
/// measured in the norm of the symmetry adapted to `C`.
///
/// Grid points where the subspace is empty impose no constraint; if every
/// point is empty the (vacuous) value 1 is returned.
pub fn delta_bound(a_op: &DenseOperator, c_op: &DenseOperator, a: f64, grid: &[f64], tol: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(KreinError::InvalidConfig(format!("delta_bound needs a > 0, got {a}")));
    }
    if grid.is_empty() || grid.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(KreinError::InvalidConfig("grid must be a non-empty subset of [0, 1]".into()));
    }
    let jhat = adapted_symmetry(c_op, tol)?;
    let norm = HilbertNorm::new(a_op.space(), &jhat)?;
    let values: Vec<Option<f64>> = grid
        .par_iter()
        .map(|&t| {
            let at = a_op.add_scaled(t, c_op)?;
            let report = eigen_nonnegative(&at, tol)?;
            subspace_definiteness(&report, a, &norm)
        })
        .collect::<Result<_>>()?;
    finish_delta(values.into_iter().flatten(), tol)
}

pub(crate) fn finish_delta(values: impl Iterator<Item = f64>, tol: f64) -> Result<f64> {
    let delta = values.fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |m| m.min(v))));
    match delta {
        None => Ok(1.0),
        Some(d) if d <= tol => Err(KreinError::NonPositiveDelta { delta: d }),
        Some(d) => Ok(d),
    }
}

/// Helper for callers holding a real vector.
pub fn real_vector(xs: &[f64]) -> Vector {
    Vector::from_iterator(xs.len(), xs.iter().map(|&x| Complex64::new(x, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krein::{adjoint, DEFAULT_TOL};

    fn j2() -> KreinSpace {
        KreinSpace::new(vec![1, -1]).unwrap()
    }

    fn hyperbolic() -> (DenseOperator, DenseOperator) {
        let s = j2();
        let a = DenseOperator::diagonal(s.clone(), &[2.0, -1.0]).unwrap();
        let cop = DenseOperator::from_real(s, &[0.15625, -0.09375, 0.09375, -0.05625]).unwrap();
        (a, cop)
    }

    #[test]
    fn diagonal_spectra() {
        let (a, _) = hyperbolic();
        let r = eigen_nonnegative(&a, DEFAULT_TOL).unwrap();
        assert_eq!(r.eigenvalues(), vec![-1.0, 2.0]);
        assert_eq!(r.clusters[0].kind, SpectralType::NegativeType);
        assert_eq!(r.clusters[1].kind, SpectralType::PositiveType);
        assert_eq!(r.zero_dim, 0);

        let h = KreinSpace::hilbert(2).unwrap();
        let r = eigen_nonnegative(&DenseOperator::diagonal(h, &[1.0, 2.0]).unwrap(), DEFAULT_TOL).unwrap();
        assert_eq!(r.eigenvalues(), vec![1.0, 2.0]);
        assert!(r.clusters.iter().all(|k| k.kind == SpectralType::PositiveType));
    }

    #[test]
    fn perturbed_hyperbolic_spectrum() {
        let (a, cop) = hyperbolic();
        let b = a.add_scaled(1.0, &cop).unwrap();
        let r = eigen_nonnegative(&b, DEFAULT_TOL).unwrap();
        let disc = (1.1f64 * 1.1 + 4.0 * 2.26875).sqrt();
        let ev = r.eigenvalues();
        assert!((ev[1] - (1.1 + disc) / 2.0).abs() < 1e-12);
        assert!((ev[0] - (1.1 - disc) / 2.0).abs() < 1e-12);
        assert!((ev[1] - 2.15351).abs() < 1e-4 && (ev[0] + 1.05351).abs() < 1e-4);
    }

    #[test]
    fn nilpotent_nonnegative_has_full_zero_part() {
        let s = j2();
        let t = DenseOperator::from_real(s, &[1.0, 1.0, -1.0, -1.0]).unwrap();
        let r = eigen_nonnegative(&t, DEFAULT_TOL).unwrap();
        assert!(r.clusters.is_empty());
        assert_eq!(r.zero_dim, 2);
        assert_eq!(r.kernel.len(), 1);
    }

    #[test]
    fn rejects_indefinite_operator() {
        let s = j2();
        let t = DenseOperator::diagonal(s, &[-1.0, 2.0]).unwrap();
        assert!(matches!(eigen_nonnegative(&t, DEFAULT_TOL), Err(KreinError::NotNonnegative { .. })));
    }

    #[test]
    fn projection_examples() {
        let (a, cop) = hyperbolic();
        let r = eigen_nonnegative(&a, DEFAULT_TOL).unwrap();
        let p = spectral_projection(&r, Interval::new(1.0, 3.0).unwrap()).unwrap();
        assert!(linalg::max_norm(&(p.matrix.entries() - DenseOperator::diagonal(j2(), &[1.0, 0.0]).unwrap().entries())) < 1e-15);
        let p = spectral_projection(&r, Interval::new(-2.0, -0.5).unwrap()).unwrap();
        assert!(linalg::max_norm(&(p.matrix.entries() - DenseOperator::diagonal(j2(), &[0.0, 1.0]).unwrap().entries())) < 1e-15);

        let b = a.add_scaled(1.0, &cop).unwrap();
        let r = eigen_nonnegative(&b, DEFAULT_TOL).unwrap();
        let p = spectral_projection(&r, Interval::new(1.0, 3.0).unwrap()).unwrap();
        let m = p.matrix.entries();
        assert!((m.trace() - c(1.0)).norm() < 1e-12);
        assert_eq!(linalg::numerical_rank(m, 1e-10), 1);
        assert!(linalg::max_norm(&(adjoint(&p.matrix).entries() - m)) < 1e-10);
        assert!(linalg::max_norm(&(m * m - m)) < 1e-12);
    }

    #[test]
    fn projection_errors() {
        let (a, _) = hyperbolic();
        let r = eigen_nonnegative(&a, DEFAULT_TOL).unwrap();
        assert!(matches!(
            spectral_projection(&r, Interval::new(-1.0, 3.0).unwrap()),
            Err(KreinError::IntervalTouchesZero { .. })
        ));
        assert!(matches!(
            spectral_projection(&r, Interval::new(0.0, 3.0).unwrap()),
            Err(KreinError::IntervalTouchesZero { .. })
        ));
        assert!(matches!(
            spectral_projection(&r, Interval::new(2.0, 3.0).unwrap()),
            Err(KreinError::EigenvalueOnBoundary { .. })
        ));
    }

    #[test]
    fn classify_examples() {
        let (a, _) = hyperbolic();
        let r = eigen_nonnegative(&a, DEFAULT_TOL).unwrap();
        assert_eq!(classify_point(&r, 2.0).unwrap(), SpectralType::PositiveType);
        assert_eq!(classify_point(&r, -1.0).unwrap(), SpectralType::NegativeType);
        assert!(matches!(classify_point(&r, 5.0), Err(KreinError::EigenvalueNotFound { .. })));
    }

    #[test]
    fn regularity_examples() {
        let s = j2();
        assert!(regularity_check(&DenseOperator::zero(s.clone()), DEFAULT_TOL));
        let nil = DenseOperator::from_real(s, &[1.0, 1.0, -1.0, -1.0]).unwrap();
        assert!(!regularity_check(&nil, DEFAULT_TOL));
        assert_eq!(regularity_ranks(&nil, DEFAULT_TOL), (1, 0));
        let (_, cop) = hyperbolic();
        assert!(regularity_check(&cop, DEFAULT_TOL));
        assert_eq!(regularity_ranks(&cop, DEFAULT_TOL), (1, 1));
    }

    #[test]
    fn adapted_symmetry_examples() {
        let h = KreinSpace::hilbert(2).unwrap();
        let psd = DenseOperator::from_real(h.clone(), &[2.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(adapted_symmetry(&psd, DEFAULT_TOL).unwrap(), DenseOperator::identity(h));

        let (_, cop) = hyperbolic();
        let jhat = adapted_symmetry(&cop, DEFAULT_TOL).unwrap();
        let phi = real_vector(&[1.25, 0.75]);
        let psi = real_vector(&[0.75, 1.25]);
        assert!((jhat.apply(&phi) - &phi).norm() < 1e-12);
        assert!((jhat.apply(&psi) + &psi).norm() < 1e-12);

        let s = j2();
        let diag = DenseOperator::diagonal(s.clone(), &[0.3, 0.0]).unwrap();
        let jhat = adapted_symmetry(&diag, DEFAULT_TOL).unwrap();
        assert!(linalg::max_norm(&(jhat.entries() - s.fundamental_symmetry())) < 1e-14);

        let nil = DenseOperator::from_real(s, &[1.0, 1.0, -1.0, -1.0]).unwrap();
        assert!(matches!(
            adapted_symmetry(&nil, DEFAULT_TOL),
            Err(KreinError::RegularityViolated { .. })
        ));
    }

    #[test]
    fn delta_examples() {
        let h = KreinSpace::hilbert(2).unwrap();
        let a = DenseOperator::diagonal(h.clone(), &[1.0, 2.0]).unwrap();
        let cop = DenseOperator::diagonal(h, &[0.0, 0.1]).unwrap();
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let d = delta_bound(&a, &cop, 0.5, &grid, DEFAULT_TOL).unwrap();
        assert!((d - 1.0).abs() < 1e-12);

        let (a, cop) = hyperbolic();
        let d0 = delta_bound(&a, &cop, 1.0, &[0.0], DEFAULT_TOL).unwrap();
        assert!((d0 - 8.0 / 17.0).abs() < 1e-12);
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let d = delta_bound(&a, &cop, 1.0, &grid, DEFAULT_TOL).unwrap();
        assert!(d > 0.0 && d <= 8.0 / 17.0 + 1e-10);
    }

    #[test]
    fn delta_rejects_bad_input() {
        let (a, cop) = hyperbolic();
        assert!(matches!(delta_bound(&a, &cop, 0.0, &[0.0], DEFAULT_TOL), Err(KreinError::InvalidConfig(_))));
        assert!(matches!(delta_bound(&a, &cop, 1.0, &[1.5], DEFAULT_TOL), Err(KreinError::InvalidConfig(_))));
        // Nothing above a = 10: no constraint, vacuous δ.
        assert_eq!(delta_bound(&a, &cop, 10.0, &[0.0, 1.0], DEFAULT_TOL).unwrap(), 1.0);
    }
}
