//! Valid `(J, A, C)` triples: operators with prescribed Krein spectra on
//! random J-orthonormal bases, named presets, and the JSON instance format.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{KreinError, Result};
use crate::krein::{is_nonnegative, DenseOperator, KreinSpace, DEFAULT_TOL};
use crate::linalg::{self, c, Matrix, Vector};
use crate::spectral::{real_vector, regularity_ranks, Interval};

pub const MAX_ATTEMPTS: usize = 1000;

pub const PRESETS: [&str; 4] = ["hilbert-diagonal", "hyperbolic-2x2", "crossing", "cluster-gap"];

/// `Σ_i λ_i σ_i [·, e_i] e_i` on a J-orthonormal family `e_i` with
/// `[e_i, e_i] = signs_i`, so that `A e_i = λ_i e_i`.
///
/// `values[i] = (λ_i, σ_i)` requires `σ_i = signs_i` and `sign λ_i = σ_i`
/// unless `λ_i = 0`; missing trailing values are zero.
pub fn build_operator(space: &KreinSpace, values: &[(f64, i8)], basis: &[Vector], signs: &[i8]) -> Result<DenseOperator> {
    if values.len() > basis.len() || basis.len() != signs.len() {
        return Err(KreinError::DimensionMismatch {
            expected: basis.len(),
            found: values.len(),
        });
    }
    let n = space.dim();
    let mut m = Matrix::zeros(n, n);
    for ((&(value, sigma), e), &s) in values.iter().zip(basis).zip(signs) {
        if sigma != s || (value != 0.0 && value.signum() != sigma as f64) {
            return Err(KreinError::SignMismatch { value, sign: s });
        }
        if value != 0.0 {
            m += e * space.apply_j(e).adjoint() * c(value * sigma as f64);
        }
    }
    DenseOperator::new(m, space.clone())
}

/// An operator pair with its origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub space: KreinSpace,
    pub a: DenseOperator,
    pub c: DenseOperator,
    pub meta: InstanceMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct InstanceMeta {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub spec: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    signature: Vec<i8>,
    #[serde(rename = "A")]
    a: Vec<Vec<[f64; 2]>>,
    #[serde(rename = "C")]
    c: Vec<Vec<[f64; 2]>>,
    #[serde(default)]
    meta: InstanceMeta,
}

fn to_rows(m: &Matrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn from_rows(rows: &[Vec<[f64; 2]>], n: usize) -> Result<Matrix> {
    if rows.len() != n {
        return Err(KreinError::DimensionMismatch {
            expected: n,
            found: rows.len(),
        });
    }
    let mut m = Matrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(KreinError::DimensionMismatch {
                expected: n,
                found: row.len(),
            });
        }
        for (j, z) in row.iter().enumerate() {
            m[(i, j)] = Complex64::new(z[0], z[1]);
        }
    }
    Ok(m)
}

impl Instance {
    pub fn new(space: KreinSpace, a: Matrix, c: Matrix, meta: InstanceMeta) -> Result<Self> {
        Ok(Self {
            a: DenseOperator::new(a, space.clone())?,
            c: DenseOperator::new(c, space.clone())?,
            space,
            meta,
        })
    }

    /// Non-negativity of `A` and `C` and regularity of `C`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        for op in [&self.a, &self.c] {
            let cert = is_nonnegative(op, tol);
            if !cert.holds() {
                return Err(KreinError::NotNonnegative {
                    lambda_min: cert.lambda_min,
                    selfadjoint: cert.selfadjoint,
                });
            }
        }
        let (rank_c, rank_c2) = regularity_ranks(&self.c, tol);
        if rank_c != rank_c2 {
            return Err(KreinError::RegularityViolated { rank_c, rank_c2 });
        }
        Ok(())
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let file = InstanceFile {
            signature: self.space.signature().to_vec(),
            a: to_rows(self.a.entries()),
            c: to_rows(self.c.entries()),
            meta: self.meta.clone(),
        };
        serde_json::to_value(file).expect("instance serializes")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: InstanceFile =
            serde_json::from_str(text).map_err(|e| KreinError::InvalidConfig(format!("instance file: {e}")))?;
        let space = KreinSpace::new(file.signature)?;
        let n = space.dim();
        Self::new(space, from_rows(&file.a, n)?, from_rows(&file.c, n)?, file.meta)
    }
}

/// Complex Gaussian matrix orthonormalized by QR.
fn random_unitary(rng: &mut ChaCha8Rng, k: usize) -> Matrix {
    if k == 0 {
        return Matrix::zeros(0, 0);
    }
    let g = DMatrix::from_fn(k, k, |_, _| {
        Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    g.qr().q()
}

/// Columns of a random J-unitary matrix `diag(U₊, U₋) · boosts · diag(V₊, V₋)`
/// with hyperbolic angles in `[0, max_boost]`, and their signs.
pub fn random_j_basis(rng: &mut ChaCha8Rng, space: &KreinSpace, max_boost: f64) -> (Vec<Vector>, Vec<i8>) {
    let n = space.dim();
    let plus: Vec<usize> = (0..n).filter(|&i| space.signature()[i] > 0).collect();
    let minus: Vec<usize> = (0..n).filter(|&i| space.signature()[i] < 0).collect();
    let block = |rng: &mut ChaCha8Rng| {
        let (up, um) = (random_unitary(rng, plus.len()), random_unitary(rng, minus.len()));
        let mut m = Matrix::zeros(n, n);
        for (a, &i) in plus.iter().enumerate() {
            for (b, &j) in plus.iter().enumerate() {
                m[(i, j)] = up[(a, b)];
            }
        }
        for (a, &i) in minus.iter().enumerate() {
            for (b, &j) in minus.iter().enumerate() {
                m[(i, j)] = um[(a, b)];
            }
        }
        m
    };
    let outer = block(rng);
    let mut boost = Matrix::identity(n, n);
    for (&i, &j) in plus.iter().zip(&minus) {
        let r = if max_boost > 0.0 { rng.random_range(0.0..max_boost) } else { 0.0 };
        boost[(i, i)] = c(r.cosh());
        boost[(j, j)] = c(r.cosh());
        boost[(i, j)] = c(r.sinh());
        boost[(j, i)] = c(r.sinh());
    }
    let inner = block(rng);
    let u = outer * boost * inner;
    let basis = (0..n).map(|k| u.column(k).into_owned()).collect();
    (basis, space.signature().to_vec())
}

/// Explicit spectra for `A` and `C` on independent random bases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub plus: usize,
    pub minus: usize,
    /// `(λ_i, σ_i)` for all `n` basis vectors.
    pub eigenvalues: Vec<(f64, i8)>,
    /// `(γ_l, σ_l)`; the remaining basis vectors of `C` span its kernel.
    pub gammas: Vec<(f64, i8)>,
    pub seed: u64,
    #[serde(default = "default_boost")]
    pub max_boost: f64,
}

fn default_boost() -> f64 {
    1.0
}

/// Places `values` on the basis vectors of matching sign, in order.
fn assign_by_sign(values: &[(f64, i8)], signs: &[i8]) -> Result<Vec<(f64, i8)>> {
    let mut out: Vec<(f64, i8)> = signs.iter().map(|&s| (0.0, s)).collect();
    let mut used = vec![false; signs.len()];
    for &(value, sigma) in values {
        if !(sigma == 1 || sigma == -1) || (value != 0.0 && value.signum() != sigma as f64) {
            return Err(KreinError::SignMismatch { value, sign: sigma });
        }
        let slot = (0..signs.len())
            .find(|&k| !used[k] && signs[k] == sigma)
            .ok_or_else(|| KreinError::InvalidConfig(format!("no basis vector of sign {sigma} left for {value}")))?;
        used[slot] = true;
        out[slot] = (value, sigma);
    }
    Ok(out)
}

pub fn from_spec(spec: &InstanceSpec) -> Result<Instance> {
    let space = KreinSpace::with_counts(spec.plus, spec.minus)?;
    let n = space.dim();
    if spec.eigenvalues.len() != n || spec.gammas.len() > n {
        return Err(KreinError::InvalidConfig(format!(
            "need {n} eigenvalues and at most {n} gammas, got {} and {}",
            spec.eigenvalues.len(),
            spec.gammas.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for _ in 0..MAX_ATTEMPTS {
        let (ea, sa) = random_j_basis(&mut rng, &space, spec.max_boost);
        let (ec, sc) = random_j_basis(&mut rng, &space, spec.max_boost);
        let a = build_operator(&space, &assign_by_sign(&spec.eigenvalues, &sa)?, &ea, &sa)?;
        let cop = build_operator(&space, &assign_by_sign(&spec.gammas, &sc)?, &ec, &sc)?;
        let inst = Instance {
            space: space.clone(),
            a,
            c: cop,
            meta: InstanceMeta {
                seed: Some(spec.seed),
                spec: serde_json::to_value(spec).expect("spec serializes"),
            },
        };
        if inst.validate(DEFAULT_TOL).is_ok() {
            return Ok(inst);
        }
    }
    Err(KreinError::GenerationFailed { attempts: MAX_ATTEMPTS })
}

/// Ranges for randomly drawn spectra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomSpec {
    pub n: usize,
    pub plus: usize,
    /// Range of `|λ|` for the eigenvalues of `A`.
    pub eigenvalue_range: (f64, f64),
    /// Range of `|γ|` for the nonzero eigenvalues of `C`.
    pub gamma_range: (f64, f64),
    /// Number of nonzero `γ`; drawn from `1..=n` when absent.
    pub rank: Option<usize>,
    pub max_boost: f64,
}

impl RandomSpec {
    pub fn new(n: usize, plus: usize) -> Self {
        Self {
            n,
            plus,
            eigenvalue_range: (0.2, 4.0),
            gamma_range: (0.01, 0.5),
            rank: None,
            max_boost: 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok_range = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi;
        if self.n == 0 || self.plus > self.n {
            return Err(KreinError::InvalidConfig(format!("invalid counts n = {}, plus = {}", self.n, self.plus)));
        }
        if !ok_range(self.eigenvalue_range) || !ok_range(self.gamma_range) {
            return Err(KreinError::InvalidConfig("ranges must satisfy 0 < lo < hi".into()));
        }
        if self.rank.is_some_and(|r| r > self.n) || !(self.max_boost >= 0.0) {
            return Err(KreinError::InvalidConfig("rank must be <= n and max_boost >= 0".into()));
        }
        Ok(())
    }
}

/// Draws explicit spectra from the ranges of `spec`; deterministic per seed.
pub fn draw_spec(seed: u64, spec: &RandomSpec) -> Result<InstanceSpec> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let minus = spec.n - spec.plus;
    let signs: Vec<i8> = (0..spec.n).map(|k| if k < spec.plus { 1 } else { -1 }).collect();
    let (elo, ehi) = spec.eigenvalue_range;
    let eigenvalues = signs
        .iter()
        .map(|&s| (s as f64 * rng.random_range(elo..ehi), s))
        .collect();
    let rank = spec.rank.unwrap_or_else(|| rng.random_range(1..=spec.n));
    let mut gamma_signs = signs.clone();
    for k in (1..gamma_signs.len()).rev() {
        gamma_signs.swap(k, rng.random_range(0..=k));
    }
    let (glo, ghi) = spec.gamma_range;
    let gammas = gamma_signs[..rank]
        .iter()
        .map(|&s| (s as f64 * rng.random_range(glo..ghi), s))
        .collect();
    Ok(InstanceSpec {
        plus: spec.plus,
        minus,
        eigenvalues,
        gammas,
        seed: rng.random(),
        max_boost: spec.max_boost,
    })
}

/// Random valid instance; deterministic per seed.
pub fn random_instance(seed: u64, spec: &RandomSpec) -> Result<Instance> {
    let full = draw_spec(seed, spec)?;
    let mut inst = from_spec(&full)?;
    inst.meta = InstanceMeta {
        seed: Some(seed),
        spec: serde_json::json!({ "random": spec, "derived": full }),
    };
    Ok(inst)
}

/// A named instance with a default interval and known reference values.
#[derive(Debug, Clone)]
pub struct Preset {
    pub name: &'static str,
    pub instance: Instance,
    pub interval: Interval,
    pub reference: BTreeMap<&'static str, f64>,
}

const CLUSTER_GAP_SEED: u64 = 20240611;

fn cluster_gap_spec() -> InstanceSpec {
    InstanceSpec {
        plus: 8,
        minus: 4,
        eigenvalues: vec![
            (1.3, 1),
            (1.7, 1),
            (2.1, 1),
            (2.5, 1),
            (2.90, 1),
            (2.92, 1),
            (2.94, 1),
            (2.96, 1),
            (-0.8, -1),
            (-1.4, -1),
            (-2.0, -1),
            (-2.6, -1),
        ],
        gammas: vec![(0.4, 1), (0.3, 1), (0.2, 1), (-0.3, -1), (-0.2, -1)],
        seed: CLUSTER_GAP_SEED,
        max_boost: 0.5,
    }
}

pub fn preset(name: &str) -> Result<Preset> {
    let meta = |name: &str| InstanceMeta {
        seed: None,
        spec: serde_json::json!({ "preset": name }),
    };
    let diag = |space: &KreinSpace, d: &[f64]| DenseOperator::diagonal(space.clone(), d);
    match name {
        "hilbert-diagonal" => {
            let h = KreinSpace::hilbert(2)?;
            Ok(Preset {
                name: "hilbert-diagonal",
                instance: Instance {
                    a: diag(&h, &[1.0, 2.0])?,
                    c: diag(&h, &[0.0, 0.1])?,
                    space: h,
                    meta: meta(name),
                },
                interval: Interval::new(0.5, 3.0)?,
                reference: BTreeMap::from([("delta", 1.0), ("lp_sum_p1", 0.1), ("bound_rhs_p1", 0.1)]),
            })
        }
        "hyperbolic-2x2" => {
            let s = KreinSpace::new(vec![1, -1])?;
            let phi = real_vector(&[1.25, 0.75]);
            let psi = real_vector(&[0.75, 1.25]);
            let cop = build_operator(&s, &[(0.1, 1), (0.0, -1)], &[phi, psi], &[1, -1])?;
            let disc = 10.285f64.sqrt();
            Ok(Preset {
                name: "hyperbolic-2x2",
                instance: Instance {
                    a: diag(&s, &[2.0, -1.0])?,
                    c: cop,
                    space: s,
                    meta: meta(name),
                },
                interval: Interval::new(1.0, 3.0)?,
                reference: BTreeMap::from([
                    ("beta_plus", (1.1 + disc) / 2.0),
                    ("beta_minus", (1.1 - disc) / 2.0),
                    ("delta", 8.0 / 17.0),
                    ("derivative_t0", 0.15625),
                    ("lp_sum_p1", (1.1 + disc) / 2.0 - 2.0),
                    ("bound_rhs_p1", 0.2125),
                ]),
            })
        }
        "crossing" => {
            let h = KreinSpace::hilbert(2)?;
            Ok(Preset {
                name: "crossing",
                instance: Instance {
                    a: diag(&h, &[2.0, 1.0])?,
                    c: diag(&h, &[0.0, 2.0])?,
                    space: h,
                    meta: meta(name),
                },
                interval: Interval::new(1.5, 2.5)?,
                reference: BTreeMap::from([("crossing_t", 0.5), ("entry_t", 0.25), ("exit_t", 0.75)]),
            })
        }
        "cluster-gap" => {
            let mut instance = from_spec(&cluster_gap_spec())?;
            instance.meta.spec = serde_json::json!({ "preset": name, "spec": cluster_gap_spec() });
            Ok(Preset {
                name: "cluster-gap",
                instance,
                interval: Interval::new(1.0, 3.0)?,
                reference: BTreeMap::from([
                    ("beta_max", 3.296494936207167),
                    ("lp_sum_p1", 0.5261149492208408),
                    ("lp_sum_p2", 0.04540872531180026),
                ]),
            })
        }
        other => Err(KreinError::UnknownPreset(other.to_string())),
    }
}

/// Max-norm distance of two matrices; used by determinism checks.
pub fn max_difference(x: &Matrix, y: &Matrix) -> f64 {
    linalg::max_norm(&(x - y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krein::j_orthonormalize;
    use crate::spectral::eigen_nonnegative;

    #[test]
    fn build_operator_examples() {
        let s = KreinSpace::new(vec![1, -1]).unwrap();
        let e = [real_vector(&[1.0, 0.0]), real_vector(&[0.0, 1.0])];
        let a = build_operator(&s, &[(2.0, 1), (-1.0, -1)], &e, &[1, -1]).unwrap();
        assert_eq!(a, DenseOperator::diagonal(s.clone(), &[2.0, -1.0]).unwrap());

        let (basis, signs) =
            j_orthonormalize(&[real_vector(&[1.25, 0.75]), real_vector(&[0.75, 1.25])], &s, 1e-10).unwrap();
        let cop = build_operator(&s, &[(0.1, 1), (0.0, -1)], &basis, &signs).unwrap();
        let expected = [0.15625, -0.09375, 0.09375, -0.05625];
        for (k, v) in expected.iter().enumerate() {
            assert!((cop.entries()[(k / 2, k % 2)].re - v).abs() < 1e-15);
        }
        assert_eq!(
            build_operator(&s, &[(0.0, 1), (0.5, -1)], &e, &[1, -1]),
            Err(KreinError::SignMismatch { value: 0.5, sign: -1 })
        );
    }

    #[test]
    fn random_basis_is_j_orthonormal() {
        let s = KreinSpace::with_counts(4, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (basis, signs) = random_j_basis(&mut rng, &s, 1.0);
        for (i, x) in basis.iter().enumerate() {
            for (j, y) in basis.iter().enumerate() {
                let want = if i == j { signs[i] as f64 } else { 0.0 };
                assert!((s.inner(x, y).unwrap() - c(want)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn random_instance_is_valid_and_deterministic() {
        let spec = RandomSpec::new(8, 5);
        let x = random_instance(42, &spec).unwrap();
        x.validate(DEFAULT_TOL).unwrap();
        let y = random_instance(42, &spec).unwrap();
        assert_eq!(x.a.entries(), y.a.entries());
        assert_eq!(x.c.entries(), y.c.entries());
        let derived: InstanceSpec = serde_json::from_value(x.meta.spec["derived"].clone()).unwrap();
        let report = eigen_nonnegative(&x.a, DEFAULT_TOL).unwrap();
        let mut want: Vec<f64> = derived.eigenvalues.iter().map(|e| e.0).collect();
        want.sort_by(f64::total_cmp);
        for (got, want) in report.eigenvalues_with_multiplicity().iter().zip(&want) {
            assert!((got - want).abs() <= 1e-8 * want.abs().max(1.0));
        }
    }

    #[test]
    fn hilbert_and_zero_gamma_cases() {
        let mut spec = RandomSpec::new(4, 4);
        let x = random_instance(1, &spec).unwrap();
        assert!(x.space.is_hilbert());
        spec.rank = Some(0);
        let x = random_instance(1, &spec).unwrap();
        assert_eq!(x.c.max_norm(), 0.0);
    }

    #[test]
    fn sign_mismatch_in_spec() {
        let spec = InstanceSpec {
            plus: 1,
            minus: 1,
            eigenvalues: vec![(1.0, 1), (-1.0, -1)],
            gammas: vec![(-0.1, 1)],
            seed: 0,
            max_boost: 1.0,
        };
        assert_eq!(from_spec(&spec).unwrap_err(), KreinError::SignMismatch { value: -0.1, sign: 1 });
    }

    #[test]
    fn presets_are_valid() {
        for name in PRESETS {
            let p = preset(name).unwrap();
            p.instance.validate(DEFAULT_TOL).unwrap();
        }
        assert!(matches!(preset("nope"), Err(KreinError::UnknownPreset(_))));
        assert_eq!(preset("cluster-gap").unwrap().instance.space.dim(), 12);
    }

    #[test]
    fn json_round_trip() {
        let p = preset("hyperbolic-2x2").unwrap();
        let text = serde_json::to_string(&p.instance.to_json_value()).unwrap();
        let back = Instance::from_json_str(&text).unwrap();
        assert_eq!(back, p.instance);
    }
}
