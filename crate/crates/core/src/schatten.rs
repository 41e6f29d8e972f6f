//! Schatten-class diagnostics and the Krein eigendata `(γ_l, φ_l)` of the
//! perturbation.

use crate::error::{KreinError, Result};
use crate::krein::{DenseOperator, KreinSpace};
use crate::linalg::{self, Vector};
use crate::spectral::{krein_decomposition, symmetry_from_decomposition};

/// Descending singular values of the matrix of `C`.
pub fn singular_values(c_op: &DenseOperator) -> Vec<f64> {
    linalg::singular_values(c_op.entries())
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if p.is_finite() && p >= 1.0 {
        Ok(())
    } else {
        Err(KreinError::InvalidExponent(p))
    }
}

/// `Σ |x|^p` summed from the smallest term up.
pub fn p_sum(values: impl IntoIterator<Item = f64>, p: f64) -> f64 {
    let mut terms: Vec<f64> = values.into_iter().map(|x| x.abs().powf(p)).collect();
    terms.sort_by(f64::total_cmp);
    linalg::stable_sum(terms)
}

/// `‖C‖_p = (Σ σ_k^p)^{1/p}` for finite `p >= 1`.
pub fn schatten_norm(c_op: &DenseOperator, p: f64) -> Result<f64> {
    check_exponent(p)?;
    Ok(p_sum(singular_values(c_op), p).powf(1.0 / p))
}

/// Krein eigendata of a regular non-negative perturbation.
#[derive(Debug, Clone)]
pub struct PerturbationData {
    pub space: KreinSpace,
    /// Nonzero eigenvalues `γ_l`, repeated by multiplicity, sorted by `|γ_l|` descending.
    pub gammas: Vec<f64>,
    /// Eigenvectors with `[φ_l, φ_m] = sign(γ_l) δ_lm`.
    pub phis: Vec<Vector>,
    /// Fundamental symmetry adapted to `C`; every `φ_l` has ĥ-norm one.
    pub adapted_symmetry: DenseOperator,
    pub p: f64,
    /// `‖C‖_p` from singular values.
    pub schatten_p: f64,
    /// `Σ_l |γ_l|^p`, which enters the variation bound.
    pub gamma_p_sum: f64,
    pub singular_values: Vec<f64>,
}

impl PerturbationData {
    pub fn rank(&self) -> usize {
        self.gammas.len()
    }

    /// `[C x, x]` rebuilt from the eigendata: `Σ_l |γ_l| |[x, φ_l]|²`.
    pub fn quadratic_form(&self, x: &Vector) -> f64 {
        linalg::stable_sum(
            self.gammas
                .iter()
                .zip(&self.phis)
                .map(|(g, phi)| g.abs() * self.space.inner_unchecked(x, phi).norm_sqr()),
        )
    }
}

pub fn krein_eigendata(c_op: &DenseOperator, p: f64, tol: f64) -> Result<PerturbationData> {
    check_exponent(p)?;
    let dec = krein_decomposition(c_op, tol)?;
    let space = c_op.space().clone();
    let adapted_symmetry = if space.is_hilbert() || space.flipped().is_hilbert() {
        DenseOperator::new(space.fundamental_symmetry(), space.clone())?
    } else {
        symmetry_from_decomposition(&space, &dec)
    };
    let mut range = dec.range;
    // Stable: ties keep the ascending-eigenvalue order of the solver.
    range.sort_by(|a, b| b.0.abs().total_cmp(&a.0.abs()));
    let (gammas, phis): (Vec<f64>, Vec<Vector>) = range.into_iter().unzip();
    let singular_values = singular_values(c_op);
    let schatten_p = p_sum(singular_values.iter().copied(), p).powf(1.0 / p);
    let gamma_p_sum = p_sum(gammas.iter().copied(), p);
    Ok(PerturbationData {
        space,
        gammas,
        phis,
        adapted_symmetry,
        p,
        schatten_p,
        gamma_p_sum,
        singular_values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krein::DEFAULT_TOL;
    use crate::spectral::real_vector;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn j2() -> KreinSpace {
        KreinSpace::new(vec![1, -1]).unwrap()
    }

    fn hyperbolic_c() -> DenseOperator {
        DenseOperator::from_real(j2(), &[0.15625, -0.09375, 0.09375, -0.05625]).unwrap()
    }

    #[test]
    fn singular_value_examples() {
        let h = KreinSpace::hilbert(2).unwrap();
        assert_eq!(singular_values(&DenseOperator::zero(h.clone())), vec![0.0, 0.0]);
        let d = singular_values(&DenseOperator::diagonal(h, &[0.1, 0.0]).unwrap());
        assert!((d[0] - 0.1).abs() < 1e-16 && d[1].abs() < 1e-16);
        let s = singular_values(&hyperbolic_c());
        assert!((s[0] - 0.2125).abs() < 1e-14);
        assert!(s[1].abs() < 1e-14);
    }

    #[test]
    fn schatten_norm_examples() {
        let h = KreinSpace::hilbert(2).unwrap();
        let d = DenseOperator::diagonal(h, &[3.0, 4.0]).unwrap();
        assert!((schatten_norm(&d, 2.0).unwrap() - 5.0).abs() < 1e-14);
        assert!((schatten_norm(&hyperbolic_c(), 1.0).unwrap() - 0.2125).abs() < 1e-14);
        assert_eq!(schatten_norm(&d, f64::INFINITY), Err(KreinError::InvalidExponent(f64::INFINITY)));
        assert_eq!(schatten_norm(&d, 0.5), Err(KreinError::InvalidExponent(0.5)));
    }

    #[test]
    fn eigendata_examples() {
        let h = KreinSpace::hilbert(2).unwrap();
        let cop = DenseOperator::diagonal(h, &[0.0, 0.1]).unwrap();
        let pd = krein_eigendata(&cop, 1.0, DEFAULT_TOL).unwrap();
        assert_eq!(pd.gammas.len(), 1);
        assert!((pd.gammas[0] - 0.1).abs() < 1e-15);
        assert!((pd.phis[0].clone() - real_vector(&[0.0, 1.0])).norm() < 1e-14);

        let pd = krein_eigendata(&hyperbolic_c(), 1.0, DEFAULT_TOL).unwrap();
        assert!((pd.gammas[0] - 0.1).abs() < 1e-14);
        assert!((pd.phis[0].clone() - real_vector(&[1.25, 0.75])).norm() < 1e-12);
        let q = pd.space.inner(&pd.phis[0], &pd.phis[0]).unwrap();
        assert!((q.re - 1.0).abs() < 1e-12);
        assert!((pd.gamma_p_sum - 0.1).abs() < 1e-14);
        // Krein eigenvalue sum and Schatten norm differ when J ≠ I.
        assert!((pd.schatten_p - 0.2125).abs() < 1e-14);

        let s = j2();
        let cop = DenseOperator::diagonal(s.clone(), &[0.2, -0.3]).unwrap();
        let pd = krein_eigendata(&cop, 2.0, DEFAULT_TOL).unwrap();
        assert_eq!(pd.gammas, vec![-0.3, 0.2]);
        for (g, phi) in pd.gammas.iter().zip(&pd.phis) {
            let q = s.inner(phi, phi).unwrap().re;
            assert_eq!(q.signum(), g.signum());
        }
    }

    #[test]
    fn eigendata_rejects_nilpotent() {
        let nil = DenseOperator::from_real(j2(), &[1.0, 1.0, -1.0, -1.0]).unwrap();
        assert!(matches!(
            krein_eigendata(&nil, 1.0, DEFAULT_TOL),
            Err(KreinError::RegularityViolated { rank_c: 1, rank_c2: 0 })
        ));
    }

    #[test]
    fn reconstruction_of_quadratic_form() {
        let cop = hyperbolic_c();
        let pd = krein_eigendata(&cop, 1.0, DEFAULT_TOL).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let x = Vector::from_fn(2, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let direct = pd.space.inner(&cop.apply(&x), &x).unwrap();
            assert!(direct.im.abs() < 1e-14);
            assert!((direct.re - pd.quadratic_form(&x)).abs() <= 1e-9 * cop.norm() * x.norm_squared());
        }
    }

    #[test]
    fn hilbert_gamma_sum_matches_schatten() {
        let h = KreinSpace::hilbert(3).unwrap();
        let cop = DenseOperator::diagonal(h, &[0.5, 0.0, 0.25]).unwrap();
        let pd = krein_eigendata(&cop, 1.5, DEFAULT_TOL).unwrap();
        assert!((pd.gamma_p_sum - pd.schatten_p.powf(1.5)).abs() < 1e-9);
    }
}
