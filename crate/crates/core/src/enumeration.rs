//! Extended enumerations `(α_n)`, `(β_n)` of the eigenvalues of `A` and
//! `B = A + C` in an interval, and the ℓ^p variation bound.

use serde::Serialize;

use crate::error::{KreinError, Result};
use crate::flow::ClampedBranch;
use crate::krein::DenseOperator;
use crate::schatten::{check_exponent, p_sum, PerturbationData};
use crate::spectral::{Interval, SpectrumReport};

/// Absolute slack on the ℓ^p bound.
pub const BOUND_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnumerationPair {
    pub branch_id: usize,
    pub alpha: f64,
    pub beta: f64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnumerationResult {
    pub interval: Interval,
    pub p: f64,
    /// One entry per branch meeting the interval; repeated `multiplicity` times
    /// in the enumerations.
    pub pairs: Vec<EnumerationPair>,
    pub delta: f64,
    /// `Σ_j m_j |β_j − α_j|^p`.
    pub lp_sum: f64,
    /// `δ^{-p} Σ_l |γ_l|^p`.
    pub bound_rhs: f64,
    pub margin: f64,
    pub passed: bool,
    /// Branches whose `α` or `β` sits at an interval endpoint.
    pub boundary_pinned: usize,
    /// ℓ^p sum of the sorted (monotone) pairing of the same two enumerations.
    pub sorted_pairing_lp_sum: f64,
}

impl EnumerationResult {
    /// `α_n` repeated by multiplicity.
    pub fn alphas(&self) -> Vec<f64> {
        expand(&self.pairs, |p| p.alpha)
    }

    /// `β_n` repeated by multiplicity.
    pub fn betas(&self) -> Vec<f64> {
        expand(&self.pairs, |p| p.beta)
    }

    /// The enumeration of the reflected problem pulled back by negation.
    pub fn negated(&self) -> Self {
        Self {
            interval: self.interval.negated(),
            pairs: self
                .pairs
                .iter()
                .map(|p| EnumerationPair {
                    alpha: -p.alpha,
                    beta: -p.beta,
                    ..*p
                })
                .collect(),
            ..self.clone()
        }
    }
}

fn expand(pairs: &[EnumerationPair], f: impl Fn(&EnumerationPair) -> f64) -> Vec<f64> {
    pairs
        .iter()
        .flat_map(|p| std::iter::repeat_n(f(p), p.multiplicity))
        .collect()
}

/// Pairs `(λ̃_j(0), λ̃_j(1))` of all clamped branches meeting the interval and
/// checks `Σ m_j |β_j − α_j|^p ≤ δ^{-p} Σ |γ_l|^p`.
pub fn extended_enumerations(
    clamped: &[ClampedBranch],
    interval: Interval,
    p: f64,
    delta: f64,
    pert: &PerturbationData,
) -> Result<EnumerationResult> {
    if interval.closure_contains_zero() {
        return Err(KreinError::IntervalContainsZero {
            lo: interval.lo,
            hi: interval.hi,
        });
    }
    check_exponent(p)?;
    if !(delta > 0.0) {
        return Err(KreinError::NonPositiveDelta { delta });
    }
    let pairs: Vec<EnumerationPair> = clamped
        .iter()
        .filter(|c| !c.is_empty())
        .map(|c| EnumerationPair {
            branch_id: c.branch_id,
            alpha: c.start_value(),
            beta: c.end_value(),
            multiplicity: c.multiplicity,
        })
        .collect();
    let lp_sum = p_sum(
        pairs
            .iter()
            .flat_map(|q| std::iter::repeat_n(q.beta - q.alpha, q.multiplicity)),
        p,
    );
    let bound_rhs = delta.powf(-p) * p_sum(pert.gammas.iter().copied(), p);
    let at_edge = |v: f64| v == interval.lo || v == interval.hi;
    let boundary_pinned = pairs.iter().filter(|q| at_edge(q.alpha) || at_edge(q.beta)).count();

    let mut alphas = expand(&pairs, |q| q.alpha);
    let mut betas = expand(&pairs, |q| q.beta);
    alphas.sort_by(f64::total_cmp);
    betas.sort_by(f64::total_cmp);
    let sorted_pairing_lp_sum = p_sum(alphas.iter().zip(&betas).map(|(a, b)| b - a), p);

    Ok(EnumerationResult {
        interval,
        p,
        pairs,
        delta,
        lp_sum,
        bound_rhs,
        margin: bound_rhs - lp_sum,
        passed: lp_sum <= bound_rhs + BOUND_TOL,
        boundary_pinned,
        sorted_pairing_lp_sum,
    })
}

/// Checks that the entries of `values` inside the open interval coincide
/// with the eigenvalues of `report` in the interval, counted with multiplicity.
pub fn accounts_for(values: &[f64], report: &SpectrumReport, interval: Interval, tol: f64) -> bool {
    let mut inside: Vec<f64> = values.iter().copied().filter(|v| interval.contains(*v)).collect();
    let mut spectrum: Vec<f64> = report
        .eigenvalues_with_multiplicity()
        .into_iter()
        .filter(|v| interval.contains(*v))
        .collect();
    inside.sort_by(f64::total_cmp);
    spectrum.sort_by(f64::total_cmp);
    inside.len() == spectrum.len()
        && inside
            .iter()
            .zip(&spectrum)
            .all(|(x, y)| (x - y).abs() <= tol * x.abs().max(1.0))
}

/// `(−A, −C)` on the space with flipped signature, with interval `(−b, −a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectedProblem {
    pub a: DenseOperator,
    pub c: DenseOperator,
    pub interval: Interval,
}

pub fn reflect(a_op: &DenseOperator, c_op: &DenseOperator, interval: Interval) -> Result<ReflectedProblem> {
    let space = a_op.space().flipped();
    Ok(ReflectedProblem {
        a: a_op.scaled(-1.0).with_space(space.clone())?,
        c: c_op.scaled(-1.0).with_space(space)?,
        interval: interval.negated(),
    })
}

/// Splits `interval` at interior points that avoid the given spectra.
pub fn split_interval(interval: Interval, points: &[f64], spectra: &[&SpectrumReport], tol: f64) -> Result<Vec<Interval>> {
    let mut cuts: Vec<f64> = points.to_vec();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    for &x in &cuts {
        if !interval.contains(x) {
            return Err(KreinError::InvalidConfig(format!(
                "split point {x} is not inside ({}, {})",
                interval.lo, interval.hi
            )));
        }
        let hit = spectra
            .iter()
            .flat_map(|r| r.clusters.iter())
            .any(|k| (k.value - x).abs() <= tol * x.abs().max(1.0));
        if hit {
            return Err(KreinError::SplitOnEigenvalue { point: x });
        }
    }
    let mut edges = vec![interval.lo];
    edges.extend(cuts);
    edges.push(interval.hi);
    edges.windows(2).map(|w| Interval::new(w[0], w[1])).collect()
}
