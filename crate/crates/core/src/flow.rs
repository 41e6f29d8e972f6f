//! Eigenvalue branches of `A(t) = A + tC` on a t-grid.
//!
//! Every grid point is solved independently; branches are then assembled by
//! a sequential min-cost matching between neighbouring points, using the
//! derivative `λ' = (1/m) Σ_k s [C x_k, x_k]` as a first-order predictor.
//! Inside a cluster the frame is rotated to diagonalize the compression of
//! `C`, which separates branches that meet exactly at a grid point.

use rayon::prelude::*;
use serde::Serialize;

use crate::assignment::{min_cost_assignment, FORBIDDEN};
use crate::error::{KreinError, Result};
use crate::krein::{is_nonnegative, DenseOperator, HilbertNorm, KreinSpace, DEFAULT_TOL};
use crate::linalg::{self, Matrix, Vector};
use crate::schatten::PerturbationData;
use crate::spectral::{
    eigen_nonnegative, finish_delta, frame_projection, regularity_ranks, subspace_definiteness, Eigencluster,
    Interval, SpectrumReport,
};

/// Relative gap below which branch derivatives inside a cluster count as equal.
const DERIVATIVE_REL_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    /// Strictly increasing, starting at 0 and ending at 1.
    pub grid: Vec<f64>,
    /// Matching ambiguity threshold, relative to `1 + ‖A‖ + ‖C‖`.
    pub matching_tol: f64,
    /// Tolerance for the hypothesis checks and the eigensolver.
    pub tol: f64,
}

impl FlowConfig {
    /// `points` equispaced grid points on `[0, 1]`.
    pub fn uniform(points: usize) -> Result<Self> {
        if points < 2 {
            return Err(KreinError::InvalidConfig(format!("grid needs at least 2 points, got {points}")));
        }
        let last = (points - 1) as f64;
        let grid = (0..points).map(|i| i as f64 / last).collect();
        Self::with_grid(grid)
    }

    pub fn with_grid(grid: Vec<f64>) -> Result<Self> {
        let cfg = Self {
            grid,
            matching_tol: 1e-10,
            tol: DEFAULT_TOL,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if g.len() < 2 {
            return Err(KreinError::InvalidConfig("grid needs at least 2 points".into()));
        }
        if g[0] != 0.0 || g[g.len() - 1] != 1.0 {
            return Err(KreinError::InvalidConfig("grid must start at 0 and end at 1".into()));
        }
        if g.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(KreinError::InvalidConfig("grid must be strictly increasing".into()));
        }
        if !(self.matching_tol > 0.0 && self.tol > 0.0) {
            return Err(KreinError::InvalidConfig("tolerances must be positive".into()));
        }
        Ok(())
    }

    /// Largest grid step.
    pub fn step(&self) -> f64 {
        self.grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }
}

/// One eigenvalue of `A(t_i)` with a frame on which `C` compresses diagonally.
#[derive(Debug, Clone)]
pub struct FlowNode {
    pub value: f64,
    pub derivative: f64,
    pub multiplicity: usize,
    pub sign: i8,
    pub frame: Vec<Vector>,
}

#[derive(Debug, Clone)]
pub struct GridPoint {
    pub t: f64,
    pub spectrum: SpectrumReport,
    pub nodes: Vec<FlowNode>,
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub id: usize,
    /// Index of the first grid point of the domain.
    pub start: usize,
    pub multiplicity: usize,
    /// `+1` for eigenvalues of positive type, `-1` for negative type.
    pub sign: i8,
    pub values: Vec<f64>,
    pub derivatives: Vec<f64>,
    /// J-orthonormal frame per grid point of the domain.
    pub frames: Vec<Vec<Vector>>,
}

impl Branch {
    /// Index of the last grid point of the domain.
    pub fn end(&self) -> usize {
        self.start + self.values.len() - 1
    }

    pub fn contains(&self, i: usize) -> bool {
        i >= self.start && i <= self.end()
    }

    pub fn value_at(&self, i: usize) -> Option<f64> {
        self.contains(i).then(|| self.values[i - self.start])
    }

    pub fn derivative_at(&self, i: usize) -> Option<f64> {
        self.contains(i).then(|| self.derivatives[i - self.start])
    }

    pub fn frame_at(&self, i: usize) -> Option<&[Vector]> {
        self.contains(i).then(|| self.frames[i - self.start].as_slice())
    }

    /// Krein-selfadjoint eigenprojection `E_j(t_i)`.
    pub fn projection(&self, space: &KreinSpace, i: usize) -> Option<Matrix> {
        let frame = self.frame_at(i)?;
        Some(frame_projection(space, frame, &vec![self.sign; frame.len()]))
    }
}

#[derive(Debug, Clone)]
pub struct FlowResult {
    pub a: DenseOperator,
    pub c: DenseOperator,
    pub grid: Vec<f64>,
    pub points: Vec<GridPoint>,
    pub branches: Vec<Branch>,
}

impl FlowResult {
    pub fn space(&self) -> &KreinSpace {
        self.a.space()
    }

    /// Uniform definiteness constant of `E_{A(t)}([a, ∞))` over the grid.
    pub fn delta(&self, a: f64, norm: &HilbertNorm, tol: f64) -> Result<f64> {
        if !(a > 0.0) {
            return Err(KreinError::InvalidConfig(format!("delta needs a > 0, got {a}")));
        }
        let values: Vec<Option<f64>> = self
            .points
            .par_iter()
            .map(|p| subspace_definiteness(&p.spectrum, a, norm))
            .collect::<Result<_>>()?;
        finish_delta(values.into_iter().flatten(), tol)
    }

    /// Branches alive at grid index `i`.
    pub fn branches_at(&self, i: usize) -> impl Iterator<Item = &Branch> {
        self.branches.iter().filter(move |b| b.contains(i))
    }
}

/// `(1/m) Σ_k s_k [C x_k, x_k]` for a J-orthonormal frame with signs `s_k`.
pub(crate) fn frame_derivative(c_op: &DenseOperator, frame: &[Vector], sign: i8) -> f64 {
    let space = c_op.space();
    let sum: f64 = frame
        .iter()
        .map(|x| space.inner_unchecked(&c_op.apply(x), x).re)
        .sum();
    sign as f64 * sum / frame.len() as f64
}

/// Derivative of a branch at grid index `i` from its frame.
pub fn branch_derivative(branch: &Branch, i: usize, c_op: &DenseOperator) -> Result<f64> {
    let frame = branch.frame_at(i).ok_or_else(|| {
        KreinError::InvalidConfig(format!("grid index {i} outside branch {} domain", branch.id))
    })?;
    Ok(frame_derivative(c_op, frame, branch.sign))
}

fn split_cluster(c_op: &DenseOperator, cluster: &Eigencluster, c_scale: f64) -> Vec<FlowNode> {
    let sign = cluster.signs[0];
    if cluster.multiplicity == 1 {
        return vec![FlowNode {
            value: cluster.value,
            derivative: frame_derivative(c_op, &cluster.frame, sign),
            multiplicity: 1,
            sign,
            frame: cluster.frame.clone(),
        }];
    }
    let space = c_op.space();
    let x = linalg::columns(space.dim(), &cluster.frame);
    let k = x.adjoint() * space.j_left(&(c_op.entries() * &x)) * linalg::c(sign as f64);
    let (vals, q) = linalg::hermitian_eigen(&linalg::hermitian_part(&k));
    let rotated = &x * q;
    let tol = DERIVATIVE_REL_TOL * c_scale.max(f64::MIN_POSITIVE);
    let mut nodes = Vec::new();
    let mut lo = 0;
    for hi in 1..=vals.len() {
        if hi < vals.len() && vals[hi] - vals[hi - 1] <= tol {
            continue;
        }
        let frame: Vec<Vector> = (lo..hi).map(|j| rotated.column(j).into_owned()).collect();
        nodes.push(FlowNode {
            value: cluster.value,
            derivative: vals[lo..hi].iter().sum::<f64>() / (hi - lo) as f64,
            multiplicity: hi - lo,
            sign,
            frame,
        });
        lo = hi;
    }
    nodes
}

fn solve_point(a_op: &DenseOperator, c_op: &DenseOperator, t: f64, tol: f64) -> Result<GridPoint> {
    let at = a_op.add_scaled(t, c_op)?;
    let spectrum = eigen_nonnegative(&at, tol).map_err(|e| match e {
        KreinError::IllConditioned { .. } => e,
        other => KreinError::EigensolveFailed {
            t,
            reason: other.to_string(),
        },
    })?;
    let c_scale = c_op.norm();
    let nodes = spectrum
        .clusters
        .iter()
        .flat_map(|k| split_cluster(c_op, k, c_scale))
        .collect();
    Ok(GridPoint { t, spectrum, nodes })
}

fn check_hypotheses(a_op: &DenseOperator, c_op: &DenseOperator, tol: f64) -> Result<()> {
    if a_op.space() != c_op.space() {
        return Err(KreinError::InvalidConfig("A and C live on different spaces".into()));
    }
    for op in [a_op, c_op] {
        let cert = is_nonnegative(op, tol);
        if !cert.holds() {
            return Err(KreinError::NotNonnegative {
                lambda_min: cert.lambda_min,
                selfadjoint: cert.selfadjoint,
            });
        }
    }
    let (rank_c, rank_c2) = regularity_ranks(c_op, tol);
    if rank_c != rank_c2 {
        return Err(KreinError::RegularityViolated { rank_c, rank_c2 });
    }
    Ok(())
}

/// Eigenvalue branches of `A + tC` over the grid of `cfg`.
pub fn track(a_op: &DenseOperator, c_op: &DenseOperator, cfg: &FlowConfig) -> Result<FlowResult> {
    cfg.validate()?;
    check_hypotheses(a_op, c_op, cfg.tol)?;
    let points: Vec<GridPoint> = cfg
        .grid
        .par_iter()
        .map(|&t| solve_point(a_op, c_op, t, cfg.tol))
        .collect::<Result<_>>()?;
    let ambiguity = cfg.matching_tol * (1.0 + a_op.norm() + c_op.norm());

    let new_branch = |id: usize, start: usize, node: &FlowNode| Branch {
        id,
        start,
        multiplicity: node.multiplicity,
        sign: node.sign,
        values: vec![node.value],
        derivatives: vec![node.derivative],
        frames: vec![node.frame.clone()],
    };
    let mut branches: Vec<Branch> = points[0]
        .nodes
        .iter()
        .enumerate()
        .map(|(id, node)| new_branch(id, 0, node))
        .collect();

    for i in 1..points.len() {
        let dt = cfg.grid[i] - cfg.grid[i - 1];
        let active: Vec<usize> = (0..branches.len()).filter(|&b| branches[b].end() == i - 1).collect();
        let nodes = &points[i].nodes;
        let cost: Vec<Vec<f64>> = active
            .iter()
            .map(|&b| {
                let br = &branches[b];
                let (v, d) = (*br.values.last().unwrap(), *br.derivatives.last().unwrap());
                nodes
                    .iter()
                    .map(|n| {
                        if n.sign != br.sign || n.multiplicity != br.multiplicity {
                            FORBIDDEN
                        } else {
                            (v + d * dt - n.value).abs() + dt * (d - n.derivative).abs()
                        }
                    })
                    .collect()
            })
            .collect();
        let assignment = min_cost_assignment(&cost);
        check_unambiguous(&cost, &assignment, ambiguity, cfg.grid[i])?;

        let mut taken = vec![false; nodes.len()];
        for (row, col) in assignment.iter().enumerate() {
            if let Some(col) = *col {
                taken[col] = true;
                let node = &nodes[col];
                let br = &mut branches[active[row]];
                br.values.push(node.value);
                br.derivatives.push(node.derivative);
                br.frames.push(node.frame.clone());
            }
        }
        for (col, node) in nodes.iter().enumerate() {
            if !taken[col] {
                let id = branches.len();
                branches.push(new_branch(id, i, node));
            }
        }
    }
    Ok(FlowResult {
        a: a_op.clone(),
        c: c_op.clone(),
        grid: cfg.grid.clone(),
        points,
        branches,
    })
}

fn check_unambiguous(cost: &[Vec<f64>], assignment: &[Option<usize>], tol: f64, t: f64) -> Result<()> {
    let cols = cost.first().map_or(0, |r| r.len());
    let mut owner = vec![None; cols];
    for (r, c) in assignment.iter().enumerate() {
        if let Some(c) = *c {
            owner[c] = Some(r);
        }
    }
    for (r1, c1) in assignment.iter().enumerate() {
        let Some(c1) = *c1 else { continue };
        for c2 in 0..cols {
            if c2 == c1 || cost[r1][c2] >= FORBIDDEN {
                continue;
            }
            let gap = match owner[c2] {
                Some(r2) if cost[r2][c1] < FORBIDDEN => {
                    cost[r1][c2] + cost[r2][c1] - cost[r1][c1] - cost[r2][c2]
                }
                Some(_) => continue,
                None => cost[r1][c2] - cost[r1][c1],
            };
            if gap <= tol {
                return Err(KreinError::MatchingAmbiguous { t });
            }
        }
    }
    Ok(())
}

/// Point where a branch crosses an interval endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub t: f64,
    /// The endpoint crossed (`a` or `b`).
    pub value: f64,
}

/// A branch frozen at its entry and exit values outside the interval.
#[derive(Debug, Clone)]
pub struct ClampedBranch {
    pub branch_id: usize,
    pub multiplicity: usize,
    pub sign: i8,
    pub interval: Interval,
    /// First and last grid index with `λ_j(t_i) ∈ (a, b)`.
    pub active: Option<(usize, usize)>,
    pub entry: Option<Crossing>,
    pub exit: Option<Crossing>,
    /// `λ̃_j(t_i)` on the whole grid.
    pub values: Vec<f64>,
}

impl ClampedBranch {
    pub fn is_empty(&self) -> bool {
        self.active.is_none()
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.active.is_some_and(|(lo, hi)| lo <= i && i <= hi)
    }

    pub fn start_value(&self) -> f64 {
        self.values[0]
    }

    pub fn end_value(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// `Ẽ_j(t_i)`: the eigenprojection on the active range and 0 elsewhere.
    pub fn projection(&self, flow: &FlowResult, i: usize) -> Matrix {
        let n = flow.space().dim();
        if !self.is_active(i) {
            return Matrix::zeros(n, n);
        }
        flow.branches[self.branch_id]
            .projection(flow.space(), i)
            .expect("active points lie in the branch domain")
    }
}

/// Root of the cubic Hermite interpolant through `(t0, y0, d0)` and
/// `(t1, y1, d1)` at level `target`, bracketed by the endpoint values.
fn hermite_crossing(t0: f64, t1: f64, y0: f64, y1: f64, d0: f64, d1: f64, target: f64) -> f64 {
    let h = t1 - t0;
    let p = |s: f64| {
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * h * d0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * h * d1
            - target
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let lo_sign = p(lo) > 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if (p(mid) > 0.0) == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    t0 + 0.5 * (lo + hi) * h
}

fn nearest_endpoint(interval: &Interval, v: f64) -> f64 {
    if v <= interval.lo {
        interval.lo
    } else {
        interval.hi
    }
}

/// Clamps a branch to `(a, b)`.
pub fn clamp(branch: &Branch, grid: &[f64], interval: Interval) -> Result<ClampedBranch> {
    if interval.closure_contains_zero() {
        return Err(KreinError::IntervalContainsZero {
            lo: interval.lo,
            hi: interval.hi,
        });
    }
    let inside: Vec<usize> = (branch.start..=branch.end())
        .filter(|&i| interval.contains(branch.values[i - branch.start]))
        .collect();
    let (Some(&first), Some(&last)) = (inside.first(), inside.last()) else {
        return Ok(ClampedBranch {
            branch_id: branch.id,
            multiplicity: branch.multiplicity,
            sign: branch.sign,
            interval,
            active: None,
            entry: None,
            exit: None,
            values: vec![f64::NAN; grid.len()],
        });
    };
    let at = |i: usize| (branch.values[i - branch.start], branch.derivatives[i - branch.start]);
    let crossing = |outside: usize, inner: usize| {
        let (yo, dout) = at(outside);
        let (yi, din) = at(inner);
        let target = nearest_endpoint(&interval, yo);
        let (t0, t1) = (grid[outside.min(inner)], grid[outside.max(inner)]);
        let t = if outside < inner {
            hermite_crossing(t0, t1, yo, yi, dout, din, target)
        } else {
            hermite_crossing(t0, t1, yi, yo, din, dout, target)
        };
        Crossing { t, value: target }
    };
    let entry = (first > branch.start).then(|| crossing(first - 1, first));
    let exit = (last < branch.end()).then(|| crossing(last + 1, last));
    let before = entry.map_or(at(first).0, |c| c.value);
    let after = exit.map_or(at(last).0, |c| c.value);
    let values = (0..grid.len())
        .map(|i| {
            if i < first {
                before
            } else if i > last {
                after
            } else {
                at(i).0
            }
        })
        .collect();
    Ok(ClampedBranch {
        branch_id: branch.id,
        multiplicity: branch.multiplicity,
        sign: branch.sign,
        interval,
        active: Some((first, last)),
        entry,
        exit,
        values,
    })
}

/// Clamps every branch of the flow.
pub fn clamp_all(flow: &FlowResult, interval: Interval) -> Result<Vec<ClampedBranch>> {
    flow.branches.iter().map(|b| clamp(b, &flow.grid, interval)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SigmaTable {
    pub branch_ids: Vec<usize>,
    pub multiplicities: Vec<usize>,
    /// `σ_jl = (1/m_j) ∫₀¹ [Ẽ_j(t) φ_l, φ_l] dt`.
    pub sigma: Vec<Vec<f64>>,
    pub sigma_j: Vec<f64>,
    /// Per-entry quadrature error estimate.
    pub sigma_error: Vec<Vec<f64>>,
    pub quadrature_error_estimate: f64,
}

/// `(1/m) Σ_k s |[φ, x_k]|² = (1/m)[E φ, φ]`.
fn weight(space: &KreinSpace, frame: &[Vector], sign: i8, phi: &Vector) -> f64 {
    let s: f64 = frame.iter().map(|x| space.inner_unchecked(phi, x).norm_sqr()).sum();
    sign as f64 * s / frame.len() as f64
}

fn quadrature(grid: &[f64], clamped: &ClampedBranch, g: &dyn Fn(usize) -> f64) -> (f64, f64) {
    let Some((first, last)) = clamped.active else {
        return (0.0, 0.0);
    };
    let mut terms = Vec::new();
    for i in first..last {
        terms.push(0.5 * (grid[i + 1] - grid[i]) * (g(i) + g(i + 1)));
    }
    let mut lo = first;
    let mut hi = last;
    if let Some(c) = clamped.entry {
        let (t0, t1) = (grid[first - 1], grid[first]);
        let theta = (c.t - t0) / (t1 - t0);
        let g_star = g(first - 1) + theta * (g(first) - g(first - 1));
        terms.push(0.5 * (t1 - c.t) * (g_star + g(first)));
        lo = first - 1;
    }
    if let Some(c) = clamped.exit {
        let (t0, t1) = (grid[last], grid[last + 1]);
        let theta = (c.t - t0) / (t1 - t0);
        let g_star = g(last) + theta * (g(last + 1) - g(last));
        terms.push(0.5 * (c.t - t0) * (g(last) + g_star));
        hi = last + 1;
    }
    let integral = linalg::stable_sum(terms);

    let length = clamped.exit.map_or(grid[last], |c| c.t) - clamped.entry.map_or(grid[first], |c| c.t);
    let mut curvature = 0.0f64;
    let mut h_max = 0.0f64;
    for i in lo + 1..hi {
        let (h1, h2) = (grid[i] - grid[i - 1], grid[i + 1] - grid[i]);
        let second = 2.0 * ((g(i + 1) - g(i)) / h2 - (g(i) - g(i - 1)) / h1) / (h1 + h2);
        curvature = curvature.max(second.abs());
        h_max = h_max.max(h1).max(h2);
    }
    (integral, length * h_max * h_max * curvature / 12.0)
}

/// σ quantities of the clamped branches by composite trapezoid quadrature.
pub fn sigma_matrix(flow: &FlowResult, clamped: &[ClampedBranch], pert: &PerturbationData) -> SigmaTable {
    let space = flow.space();
    let rows: Vec<(Vec<f64>, Vec<f64>)> = clamped
        .par_iter()
        .map(|cb| {
            let branch = &flow.branches[cb.branch_id];
            pert.phis
                .iter()
                .map(|phi| {
                    let g = |i: usize| weight(space, branch.frame_at(i).unwrap(), branch.sign, phi);
                    quadrature(&flow.grid, cb, &g)
                })
                .unzip()
        })
        .collect();
    let (sigma, sigma_error): (Vec<Vec<f64>>, Vec<Vec<f64>>) = rows.into_iter().unzip();
    let sigma_j = sigma.iter().map(|r| linalg::stable_sum(r.iter().copied())).collect();
    let quadrature_error_estimate = sigma_error.iter().flatten().copied().fold(0.0, f64::max);
    SigmaTable {
        branch_ids: clamped.iter().map(|c| c.branch_id).collect(),
        multiplicities: clamped.iter().map(|c| c.multiplicity).collect(),
        sigma,
        sigma_j,
        sigma_error,
        quadrature_error_estimate,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HdiReport {
    /// `|(λ̃_j(1) − λ̃_j(0)) − Σ_l |γ_l| σ_jl|` per clamped branch.
    pub residuals: Vec<f64>,
    pub tolerances: Vec<f64>,
    pub max_residual: f64,
    pub hdi_ok: bool,
    pub sigma_bound: f64,
    pub sigma_j_ok: bool,
    /// `Σ_j m_j σ_jl` per perturbation index.
    pub column_sums: Vec<f64>,
    pub column_ok: bool,
    pub passed: bool,
}

/// Checks the integrated derivative identity and the bounds on σ.
pub fn check_hdi(clamped: &[ClampedBranch], sigma: &SigmaTable, pert: &PerturbationData, delta: f64) -> HdiReport {
    let abs_gamma: Vec<f64> = pert.gammas.iter().map(|g| g.abs()).collect();
    let mut residuals = Vec::with_capacity(clamped.len());
    let mut tolerances = Vec::with_capacity(clamped.len());
    for (j, cb) in clamped.iter().enumerate() {
        if cb.is_empty() {
            residuals.push(0.0);
            tolerances.push(0.0);
            continue;
        }
        let change = cb.end_value() - cb.start_value();
        let predicted = linalg::stable_sum(abs_gamma.iter().zip(&sigma.sigma[j]).map(|(g, s)| g * s));
        let err = linalg::stable_sum(abs_gamma.iter().zip(&sigma.sigma_error[j]).map(|(g, e)| g * e));
        residuals.push((change - predicted).abs());
        tolerances.push(1e-9 * (1.0 + change.abs()) + 10.0 * err);
    }
    let hdi_ok = residuals.iter().zip(&tolerances).all(|(r, t)| r <= t);
    let sigma_bound = 1.0 / delta;
    let sigma_j_ok = sigma.sigma_j.iter().zip(&sigma.sigma_error).all(|(s, e)| {
        *s <= sigma_bound + 1e-9 + 10.0 * e.iter().sum::<f64>()
    });
    let mut column_sums = Vec::with_capacity(abs_gamma.len());
    let mut column_ok = true;
    for l in 0..abs_gamma.len() {
        let sum = linalg::stable_sum(sigma.sigma.iter().zip(&sigma.multiplicities).map(|(r, &m)| m as f64 * r[l]));
        let err: f64 = sigma.sigma_error.iter().zip(&sigma.multiplicities).map(|(r, &m)| m as f64 * r[l]).sum();
        column_ok &= sum <= sigma_bound + 1e-9 + 10.0 * err;
        column_sums.push(sum);
    }
    HdiReport {
        max_residual: residuals.iter().copied().fold(0.0, f64::max),
        residuals,
        tolerances,
        hdi_ok,
        sigma_bound,
        sigma_j_ok,
        column_sums,
        column_ok,
        passed: hdi_ok && sigma_j_ok && column_ok,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectionReport {
    /// `max_i ‖Σ_j Ẽ_j(t_i) − E_{A(t_i)}((a, b))‖_max`.
    pub identity_residual: f64,
    /// Largest ĥ-norm of a clamped projection `Ẽ_j(t_i)`.
    pub max_branch_norm: f64,
    /// Largest ĥ-norm of `E_{A(t_i)}((a, b))`.
    pub max_interval_norm: f64,
    pub bound: f64,
    pub identity_ok: bool,
    pub norms_ok: bool,
}

/// Projection identity and uniform ĥ-norm bounds on every grid point.
pub fn check_projections(flow: &FlowResult, clamped: &[ClampedBranch], norm: &HilbertNorm, delta: f64) -> ProjectionReport {
    let interval = clamped.first().map(|c| c.interval);
    let per_point: Vec<(f64, f64, f64)> = (0..flow.grid.len())
        .into_par_iter()
        .map(|i| {
            let Some(interval) = interval else {
                return (0.0, 0.0, 0.0);
            };
            let n = flow.space().dim();
            let mut sum = Matrix::zeros(n, n);
            let mut branch_norm = 0.0f64;
            for cb in clamped.iter().filter(|c| c.is_active(i)) {
                let p = cb.projection(flow, i);
                branch_norm = branch_norm.max(norm.operator_norm(&p));
                sum += p;
            }
            let e = flow.points[i].spectrum.projection_where(|v| interval.contains(v));
            (linalg::max_norm(&(sum - &e)), branch_norm, norm.operator_norm(&e))
        })
        .collect();
    let identity_residual = per_point.iter().map(|p| p.0).fold(0.0, f64::max);
    let max_branch_norm = per_point.iter().map(|p| p.1).fold(0.0, f64::max);
    let max_interval_norm = per_point.iter().map(|p| p.2).fold(0.0, f64::max);
    let bound = 1.0 / delta;
    ProjectionReport {
        identity_residual,
        max_branch_norm,
        max_interval_norm,
        bound,
        identity_ok: identity_residual <= 1e-8,
        norms_ok: max_branch_norm <= bound + 1e-8 && max_interval_norm <= bound + 1e-8,
    }
}

/// Largest relative step against the expected direction of each branch
/// (upwards for positive type, downwards for negative type).
pub fn monotonicity_violation(flow: &FlowResult) -> f64 {
    flow.branches
        .iter()
        .flat_map(|b| {
            b.values
                .windows(2)
                .map(move |w| b.sign as f64 * (w[0] - w[1]) / w[0].abs().max(1.0))
        })
        .fold(0.0, f64::max)
}

/// Largest `|λ_j'(t_i) − (λ_j(t_i+h) − λ_j(t_i−h)) / 2h|` per branch over grid
/// points in `[h, 1−h]` whose eigenvalue is separated from the rest of the
/// spectrum by more than `10h`; `None` when no point qualifies.
pub fn finite_difference_errors(flow: &FlowResult, h: f64, tol: f64) -> Result<Vec<Option<f64>>> {
    let eligible: Vec<usize> = (0..flow.grid.len())
        .filter(|&i| flow.grid[i] - h >= 0.0 && flow.grid[i] + h <= 1.0)
        .collect();
    let shifted: Vec<(usize, SpectrumReport, SpectrumReport)> = eligible
        .par_iter()
        .map(|&i| {
            let t = flow.grid[i];
            let solve = |s: f64| {
                let op = flow.a.add_scaled(s, &flow.c)?;
                eigen_nonnegative(&op, tol).map_err(|e| KreinError::EigensolveFailed {
                    t: s,
                    reason: e.to_string(),
                })
            };
            Ok((i, solve(t - h)?, solve(t + h)?))
        })
        .collect::<Result<_>>()?;

    let pick = |report: &SpectrumReport, sign: i8, guess: f64, m: usize| -> Option<f64> {
        let mut vals: Vec<f64> = report
            .eigenvalues_with_multiplicity()
            .into_iter()
            .filter(|v| v.signum() == sign as f64)
            .collect();
        if vals.len() < m {
            return None;
        }
        vals.sort_by(|x, y| (x - guess).abs().total_cmp(&(y - guess).abs()));
        Some(vals[..m].iter().sum::<f64>() / m as f64)
    };

    Ok(flow
        .branches
        .iter()
        .map(|b| {
            let mut worst: Option<f64> = None;
            for (i, minus, plus) in &shifted {
                let (Some(v), Some(d)) = (b.value_at(*i), b.derivative_at(*i)) else { continue };
                let others = flow.points[*i]
                    .nodes
                    .iter()
                    .filter(|n| !(n.value == v && n.sign == b.sign && n.derivative == d))
                    .map(|n| (n.value - v).abs())
                    .chain(std::iter::once(v.abs()))
                    .fold(f64::INFINITY, f64::min);
                if others <= 10.0 * h {
                    continue;
                }
                let (Some(lo), Some(hi)) = (
                    pick(minus, b.sign, v - d * h, b.multiplicity),
                    pick(plus, b.sign, v + d * h, b.multiplicity),
                ) else {
                    continue;
                };
                let err = (d - (hi - lo) / (2.0 * h)).abs();
                worst = Some(worst.map_or(err, |w: f64| w.max(err)));
            }
            worst
        })
        .collect())
}

/// `[·,·]`-Gram minimum of a branch frame in the ĥ-norm.
pub fn frame_gram_min(norm: &HilbertNorm, frame: &[Vector]) -> Result<f64> {
    Ok(norm.gram_report(frame, 1e-10)?.lambda_min)
}
