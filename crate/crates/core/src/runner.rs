//! End-to-end pipeline behind the command line: track → clamp → σ → checks
//! → enumeration, plus report and trajectory serialization.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::enumeration::{extended_enumerations, reflect, split_interval, EnumerationResult};
use crate::error::{KreinError, Result};
use crate::flow::{
    check_hdi, check_projections, clamp_all, finite_difference_errors, frame_gram_min, monotonicity_violation,
    sigma_matrix, track, FlowConfig, HdiReport, ProjectionReport, SigmaTable,
};
use crate::instances::{random_instance, Instance, InstanceMeta, RandomSpec};
use crate::krein::{HilbertNorm, DEFAULT_TOL};
use crate::schatten::krein_eigendata;
use crate::spectral::Interval;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 2;
pub const EXIT_INVALID: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

pub const MONOTONICITY_TOL: f64 = 1e-9;
pub const FD_STEP: f64 = 1e-3;
pub const FD_TOL: f64 = 1e-5;

/// Exit code for a pipeline error.
pub fn exit_code(err: &KreinError) -> i32 {
    use KreinError::*;
    match err {
        IllConditioned { .. }
        | MatchingAmbiguous { .. }
        | EigensolveFailed { .. }
        | DegenerateKernel { .. }
        | DegenerateSubspace { .. }
        | NotFundamentalSymmetry(_)
        | EigenvalueNotFound { .. } => EXIT_NUMERICAL,
        _ => EXIT_INVALID,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub interval: Interval,
    pub p: f64,
    /// Number of grid points on `[0, 1]`.
    pub steps: usize,
    pub tol: f64,
    pub matching_tol: f64,
    /// Optional interior split points of the interval.
    pub split: Vec<f64>,
}

impl RunConfig {
    pub fn new(interval: Interval, p: f64, steps: usize) -> Self {
        Self {
            interval,
            p,
            steps,
            tol: DEFAULT_TOL,
            matching_tol: 1e-10,
            split: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.interval.closure_contains_zero() {
            return Err(KreinError::IntervalContainsZero {
                lo: self.interval.lo,
                hi: self.interval.hi,
            });
        }
        if !(self.p.is_finite() && self.p >= 1.0) {
            return Err(KreinError::InvalidExponent(self.p));
        }
        if self.steps < 2 {
            return Err(KreinError::InvalidConfig(format!("steps must be >= 2, got {}", self.steps)));
        }
        if !(self.tol > 0.0 && self.matching_tol > 0.0) {
            return Err(KreinError::InvalidConfig("tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchRecord {
    pub id: usize,
    pub multiplicity: usize,
    pub sign: i8,
    pub t_start: f64,
    pub t_end: f64,
    pub lambda_start: f64,
    pub lambda_end: f64,
    pub meets_interval: bool,
    pub clamped_start: Option<f64>,
    pub clamped_end: Option<f64>,
    pub max_fd_error: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SchattenReport {
    pub p: f64,
    pub schatten_norm: f64,
    pub gamma_p_sum: f64,
    pub singular_values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SubintervalReport {
    pub interval: Interval,
    pub delta: f64,
    pub lp_sum: f64,
    pub bound_rhs: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Checks {
    pub bound_ok: bool,
    pub monotonicity_violation: f64,
    pub monotone_ok: bool,
    pub hdi_residual_max: f64,
    pub hdi: HdiReport,
    pub projection_identity: f64,
    pub projections: ProjectionReport,
    /// Smallest ĥ-Gram eigenvalue of a positive branch frame inside the interval.
    pub gram_min: Option<f64>,
    pub gram_ok: bool,
    pub fd_max_error: Option<f64>,
    pub fd_ok: bool,
    pub split_ok: bool,
}

impl Checks {
    /// Names of the failed checks. The finite-difference comparison is a
    /// diagnostic of the difference quotient and does not enter the verdict.
    pub fn failed(&self) -> Vec<&'static str> {
        [
            ("bound", self.bound_ok),
            ("monotonicity", self.monotone_ok),
            ("hdi_identity", self.hdi.hdi_ok),
            ("sigma_row_bound", self.hdi.sigma_j_ok),
            ("sigma_column_bound", self.hdi.column_ok),
            ("projection_identity", self.projections.identity_ok),
            ("projection_norms", self.projections.norms_ok),
            ("gram_min", self.gram_ok),
            ("split_bounds", self.split_ok),
        ]
        .into_iter()
        .filter(|(_, ok)| !ok)
        .map(|(name, _)| name)
        .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InstanceSummary {
    pub n: usize,
    pub signature: Vec<i8>,
    pub meta: InstanceMeta,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub instance: InstanceSummary,
    pub config: RunConfig,
    /// The negative interval was handled through `(−A, −C)` on the flipped space.
    pub reflected: bool,
    pub delta: f64,
    pub gammas: Vec<f64>,
    pub schatten: SchattenReport,
    pub branches: Vec<BranchRecord>,
    pub sigma: SigmaTable,
    pub enumeration: EnumerationResult,
    pub subintervals: Vec<SubintervalReport>,
    pub lp_sum: f64,
    pub bound_rhs: f64,
    pub margin: f64,
    pub checks: Checks,
    pub failed_checks: Vec<&'static str>,
    pub passed: bool,
    pub exit_status: i32,
    pub surplus_note: &'static str,
    pub delta_note: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub branch_id: usize,
    pub lambda: f64,
    pub multiplicity: usize,
    pub gram_min: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: Report,
    pub trajectory: Vec<TrajectoryRow>,
}

const SURPLUS_NOTE: &str = "surplus enumeration entries are clamped interval-endpoint values";
const DELTA_NOTE: &str =
    "delta is measured in the norm of the canonical adapted symmetry; other fundamental decompositions of ker C give other valid values";

/// Runs the full pipeline on one instance.
pub fn run(instance: &Instance, cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    instance.validate(cfg.tol)?;
    let reflected = cfg.interval.hi < 0.0;
    let (a, c, interval) = if reflected {
        let r = reflect(&instance.a, &instance.c, cfg.interval)?;
        (r.a, r.c, r.interval)
    } else {
        (instance.a.clone(), instance.c.clone(), cfg.interval)
    };
    let orient = if reflected { -1.0 } else { 1.0 };

    let flow_cfg = FlowConfig {
        matching_tol: cfg.matching_tol,
        tol: cfg.tol,
        ..FlowConfig::uniform(cfg.steps)?
    };
    let flow = track(&a, &c, &flow_cfg)?;
    let pert = krein_eigendata(&c, cfg.p, cfg.tol)?;
    let norm = HilbertNorm::new(a.space(), &pert.adapted_symmetry)?;
    let delta = flow.delta(interval.lo, &norm, cfg.tol)?;
    let clamped = clamp_all(&flow, interval)?;
    let sigma = sigma_matrix(&flow, &clamped, &pert);
    let hdi = check_hdi(&clamped, &sigma, &pert, delta);
    let projections = check_projections(&flow, &clamped, &norm, delta);
    let enumeration = extended_enumerations(&clamped, interval, cfg.p, delta, &pert)?;
    let monotonicity = monotonicity_violation(&flow);
    let fd = finite_difference_errors(&flow, FD_STEP, cfg.tol)?;

    let mut subintervals = Vec::new();
    if !cfg.split.is_empty() {
        let points: Vec<f64> = cfg.split.iter().map(|x| orient * x).collect();
        let ends = [&flow.points[0].spectrum, &flow.points[flow.points.len() - 1].spectrum];
        for sub in split_interval(interval, &points, &ends, cfg.tol)? {
            let d = flow.delta(sub.lo, &norm, cfg.tol)?;
            let e = extended_enumerations(&clamp_all(&flow, sub)?, sub, cfg.p, d, &pert)?;
            subintervals.push(SubintervalReport {
                interval: if reflected { sub.negated() } else { sub },
                delta: d,
                lp_sum: e.lp_sum,
                bound_rhs: e.bound_rhs,
                passed: e.passed,
            });
        }
    }

    let mut trajectory = Vec::new();
    let mut gram_min: Option<f64> = None;
    for b in &flow.branches {
        let cb = &clamped[b.id];
        for i in b.start..=b.end() {
            let g = frame_gram_min(&norm, b.frame_at(i).expect("in domain"))?;
            if b.sign > 0 && cb.is_active(i) {
                gram_min = Some(gram_min.map_or(g, |m: f64| m.min(g)));
            }
            trajectory.push(TrajectoryRow {
                t: flow.grid[i],
                branch_id: b.id,
                lambda: orient * b.values[i - b.start],
                multiplicity: b.multiplicity,
                gram_min: g,
            });
        }
    }

    let branches: Vec<BranchRecord> = flow
        .branches
        .iter()
        .map(|b| {
            let cb = &clamped[b.id];
            BranchRecord {
                id: b.id,
                multiplicity: b.multiplicity,
                sign: (orient as i8) * b.sign,
                t_start: flow.grid[b.start],
                t_end: flow.grid[b.end()],
                lambda_start: orient * b.values[0],
                lambda_end: orient * b.values[b.values.len() - 1],
                meets_interval: !cb.is_empty(),
                clamped_start: (!cb.is_empty()).then(|| orient * cb.start_value()),
                clamped_end: (!cb.is_empty()).then(|| orient * cb.end_value()),
                max_fd_error: fd[b.id],
            }
        })
        .collect();

    let fd_max_error = fd.iter().flatten().copied().reduce(f64::max);
    let gram_ok = gram_min.is_none_or(|g| g >= delta - 1e-9);
    let checks = Checks {
        bound_ok: enumeration.passed,
        monotonicity_violation: monotonicity,
        monotone_ok: monotonicity <= MONOTONICITY_TOL,
        hdi_residual_max: hdi.max_residual,
        projection_identity: projections.identity_residual,
        hdi,
        projections,
        gram_min,
        gram_ok,
        fd_max_error,
        fd_ok: fd_max_error.is_none_or(|e| e <= FD_TOL),
        split_ok: subintervals.iter().all(|s| s.passed),
    };
    let failed_checks = checks.failed();
    let passed = failed_checks.is_empty();
    let enumeration = if reflected { enumeration.negated() } else { enumeration };
    let report = Report {
        instance: InstanceSummary {
            n: instance.space.dim(),
            signature: instance.space.signature().to_vec(),
            meta: instance.meta.clone(),
        },
        config: cfg.clone(),
        reflected,
        delta,
        gammas: pert.gammas.iter().map(|g| orient * g).collect(),
        schatten: SchattenReport {
            p: cfg.p,
            schatten_norm: pert.schatten_p,
            gamma_p_sum: pert.gamma_p_sum,
            singular_values: pert.singular_values.clone(),
        },
        branches,
        sigma,
        lp_sum: enumeration.lp_sum,
        bound_rhs: enumeration.bound_rhs,
        margin: enumeration.margin,
        enumeration,
        subintervals,
        checks,
        failed_checks,
        passed,
        exit_status: if passed { EXIT_PASS } else { EXIT_CHECK_FAILED },
        surplus_note: SURPLUS_NOTE,
        delta_note: DELTA_NOTE,
    };
    Ok(RunOutcome { report, trajectory })
}

/// One entry of a batch verification.
#[derive(Debug, Clone, Serialize)]
pub struct BatchEntry {
    pub label: String,
    pub seed: Option<u64>,
    pub exit_code: i32,
    pub passed: bool,
    pub lp_sum: Option<f64>,
    pub bound_rhs: Option<f64>,
    pub margin: Option<f64>,
    pub failed_checks: Vec<&'static str>,
    pub fd_max_error: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BatchReport {
    pub count: usize,
    pub passed: usize,
    pub failed: usize,
    pub min_margin: Option<f64>,
    pub exit_code: i32,
    pub entries: Vec<BatchEntry>,
}

/// A batch item: a ready instance or a seed for the random generator.
#[derive(Debug, Clone)]
pub enum BatchItem {
    Instance { label: String, instance: Box<Instance>, config: RunConfig },
    Random { seed: u64, spec: RandomSpec, config: RunConfig },
}

fn entry_from(label: String, seed: Option<u64>, outcome: Result<RunOutcome>) -> BatchEntry {
    match outcome {
        Ok(o) => BatchEntry {
            label,
            seed,
            exit_code: o.report.exit_status,
            passed: o.report.passed,
            lp_sum: Some(o.report.lp_sum),
            bound_rhs: Some(o.report.bound_rhs),
            margin: Some(o.report.margin),
            failed_checks: o.report.failed_checks.clone(),
            fd_max_error: o.report.checks.fd_max_error,
            error: None,
        },
        Err(e) => BatchEntry {
            label,
            seed,
            exit_code: exit_code(&e),
            passed: false,
            lp_sum: None,
            bound_rhs: None,
            margin: None,
            failed_checks: Vec::new(),
            fd_max_error: None,
            error: Some(e.to_string()),
        },
    }
}

/// Runs every item (in parallel) and aggregates; the exit code is the
/// largest individual exit code.
pub fn verify(items: &[BatchItem]) -> BatchReport {
    let entries: Vec<BatchEntry> = items
        .par_iter()
        .map(|item| match item {
            BatchItem::Instance { label, instance, config } => entry_from(label.clone(), instance.meta.seed, run(instance, config)),
            BatchItem::Random { seed, spec, config } => {
                let outcome = random_instance(*seed, spec).and_then(|inst| run(&inst, config));
                entry_from(format!("random-{seed}"), Some(*seed), outcome)
            }
        })
        .collect();
    let passed = entries.iter().filter(|e| e.passed).count();
    BatchReport {
        count: entries.len(),
        passed,
        failed: entries.len() - passed,
        min_margin: entries.iter().filter_map(|e| e.margin).reduce(f64::min),
        exit_code: entries.iter().map(|e| e.exit_code).max().unwrap_or(EXIT_PASS),
        entries,
    }
}

/// Formats every float in scientific notation with round-trip precision.
struct ScientificFormatter(serde_json::ser::PrettyFormatter<'static>);

impl serde_json::ser::Formatter for ScientificFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:e}")
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Pretty JSON with scientific-notation floats.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, ScientificFormatter(Default::default()));
    value.serialize(&mut ser).expect("report serializes");
    out.push(b'\n');
    String::from_utf8(out).expect("JSON is UTF-8")
}

pub const TRAJECTORY_HEADER: [&str; 5] = ["t", "branch_id", "lambda", "multiplicity", "gram_min"];

pub fn write_trajectory<W: Write>(rows: &[TrajectoryRow], writer: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRAJECTORY_HEADER)?;
    for r in rows {
        w.write_record([
            format!("{:e}", r.t),
            r.branch_id.to_string(),
            format!("{:e}", r.lambda),
            r.multiplicity.to_string(),
            format!("{:e}", r.gram_min),
        ])?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::preset;

    fn run_preset(name: &str, steps: usize) -> RunOutcome {
        let p = preset(name).unwrap();
        run(&p.instance, &RunConfig::new(p.interval, 1.0, steps)).unwrap()
    }

    #[test]
    fn hilbert_diagonal_pipeline() {
        let o = run_preset("hilbert-diagonal", 101);
        assert!((o.report.lp_sum - 0.1).abs() < 1e-14);
        assert!((o.report.bound_rhs - 0.1).abs() < 1e-14);
        assert_eq!(o.report.delta, 1.0);
        assert!(o.report.passed, "{:#?}", o.report.checks);
    }

    #[test]
    fn hyperbolic_pipeline() {
        let o = run_preset("hyperbolic-2x2", 201);
        assert!((o.report.lp_sum - 0.15351).abs() < 1e-4);
        assert!((o.report.bound_rhs - 0.2125).abs() < 1e-12);
        assert!(o.report.passed, "{:#?}", o.report.checks);
    }

    #[test]
    fn negative_interval_is_reflected() {
        let p = preset("hyperbolic-2x2").unwrap();
        let o = run(&p.instance, &RunConfig::new(Interval::new(-3.0, -0.5).unwrap(), 1.0, 201)).unwrap();
        assert!(o.report.reflected);
        let pair = o.report.enumeration.pairs[0];
        assert!((pair.alpha + 1.0).abs() < 1e-12);
        assert!((pair.beta - (1.1 - 10.285f64.sqrt()) / 2.0).abs() < 1e-12);
        assert!(o.report.passed, "{:#?}", o.report.checks);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&KreinError::RegularityViolated { rank_c: 1, rank_c2: 0 }), EXIT_INVALID);
        assert_eq!(exit_code(&KreinError::MatchingAmbiguous { t: 0.5 }), EXIT_NUMERICAL);
        assert_eq!(exit_code(&KreinError::GenerationFailed { attempts: 1 }), EXIT_INVALID);
    }

    #[test]
    fn json_floats_are_scientific() {
        let s = to_json_string(&serde_json::json!({ "x": 0.25, "y": [1.0, -3.5e-12], "z": 2 }));
        assert!(s.contains("\"x\": 2.5e-1"));
        assert!(s.contains("-3.5e-12"));
        assert!(s.contains("\"z\": 2"));
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["x"], 0.25);
    }

    #[test]
    fn csv_header_and_rows() {
        let rows = [TrajectoryRow {
            t: 0.5,
            branch_id: 3,
            lambda: 2.0,
            multiplicity: 1,
            gram_min: 1.0,
        }];
        let mut out = Vec::new();
        write_trajectory(&rows, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "t,branch_id,lambda,multiplicity,gram_min\n5e-1,3,2e0,1,1e0\n");
    }

    #[test]
    fn empty_batch_passes() {
        let r = verify(&[]);
        assert_eq!((r.count, r.exit_code), (0, EXIT_PASS));
    }
}
