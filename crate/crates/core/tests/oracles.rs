use krein_flow::flow::{branch_derivative, clamp_all, track, FlowConfig};
use krein_flow::instances::{preset, random_instance, RandomSpec};
use krein_flow::krein::{DenseOperator, DEFAULT_TOL};
use krein_flow::runner::{run, RunConfig};
use krein_flow::spectral::eigen_nonnegative;
use nalgebra::DMatrix;
use num_complex::Complex64;

fn general_eigenvalues(m: &DMatrix<Complex64>) -> Vec<Complex64> {
    let ev = m.clone().schur().eigenvalues().expect("complex Schur form is triangular");
    let mut v: Vec<Complex64> = ev.iter().copied().collect();
    v.sort_by(|x, y| x.re.total_cmp(&y.re));
    v
}

fn structured_sorted(op: &DenseOperator) -> Vec<f64> {
    let mut v = eigen_nonnegative(op, DEFAULT_TOL).unwrap().eigenvalues_with_multiplicity();
    v.resize(op.dim(), 0.0);
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn structured_solver_matches_general_schur() {
    for seed in 0..40u64 {
        let n = 2 + (seed as usize % 11);
        let inst = random_instance(seed, &RandomSpec::new(n, n.div_ceil(2))).unwrap();
        let b = inst.a.add_scaled(1.0, &inst.c).unwrap();
        for op in [&inst.a, &b] {
            let general = general_eigenvalues(op.entries());
            let ours = structured_sorted(op);
            let scale = op.norm().max(1.0);
            for (g, s) in general.iter().zip(&ours) {
                assert!(g.im.abs() <= 1e-7 * scale, "seed {seed}: complex eigenvalue {g}");
                assert!((g.re - s).abs() <= 1e-7 * scale, "seed {seed}: {} vs {s}", g.re);
            }
        }
    }
}

#[test]
fn hyperbolic_closed_form() {
    let p = preset("hyperbolic-2x2").unwrap();
    let r = &p.reference;
    let b = p.instance.a.add_scaled(1.0, &p.instance.c).unwrap();
    let ev = structured_sorted(&b);
    assert!((ev[0] - r["beta_minus"]).abs() <= 1e-10);
    assert!((ev[1] - r["beta_plus"]).abs() <= 1e-10);
    let flow = track(&p.instance.a, &p.instance.c, &FlowConfig::uniform(101).unwrap()).unwrap();
    let top = flow.branches.iter().find(|br| br.sign > 0).unwrap();
    let d0 = branch_derivative(top, 0, &p.instance.c).unwrap();
    assert!((d0 - r["derivative_t0"]).abs() <= 1e-10);
    let out = run(&p.instance, &RunConfig::new(p.interval, 1.0, 201)).unwrap();
    assert!((out.report.lp_sum - r["lp_sum_p1"]).abs() <= 1e-10);
    assert!((out.report.bound_rhs - r["bound_rhs_p1"]).abs() <= 1e-12);
    assert!(out.report.delta > 0.0 && out.report.delta <= r["delta"] + 1e-10);
}

const CLUSTER_GAP_A: [f64; 12] = [
    -2.6000000000000085, -1.9999999999999991, -1.3999999999999995, -0.8000000000000024, 1.3000000000000034,
    1.699999999999999, 2.1000000000000023, 2.5, 2.9, 2.9200000000000035, 2.9400000000000057, 2.9600000000000004,
];

const CLUSTER_GAP_B: [f64; 12] = [
    -2.8286359624202495, -2.270360017732166, -1.414718946074513, -0.8711883105823266, 1.4536792502669076,
    1.727368541392602, 2.1680548599068215, 2.5557594027937025, 2.9412528948608214, 3.0098827479714694,
    3.1524106034097756, 3.296494936207167,
];

#[test]
fn cluster_gap_matches_frozen_reference() {
    let p = preset("cluster-gap").unwrap();
    let b = p.instance.a.add_scaled(1.0, &p.instance.c).unwrap();
    for (op, reference) in [(&p.instance.a, CLUSTER_GAP_A), (&b, CLUSTER_GAP_B)] {
        for (x, y) in structured_sorted(op).iter().zip(reference) {
            assert!((x - y).abs() <= 1e-9, "{x} vs {y}");
        }
    }
    for (exponent, key) in [(1.0, "lp_sum_p1"), (2.0, "lp_sum_p2")] {
        let out = run(&p.instance, &RunConfig::new(p.interval, exponent, 101)).unwrap();
        assert!((out.report.lp_sum - p.reference[key]).abs() <= 1e-9);
        assert!(out.report.passed);
    }
}

#[test]
fn hilbert_diagonal_reference() {
    let p = preset("hilbert-diagonal").unwrap();
    let out = run(&p.instance, &RunConfig::new(p.interval, 1.0, 101)).unwrap();
    assert_eq!(out.report.delta, 1.0);
    assert!((out.report.lp_sum - p.reference["lp_sum_p1"]).abs() <= 4.0 * f64::EPSILON);
    assert!((out.report.bound_rhs - p.reference["bound_rhs_p1"]).abs() <= 4.0 * f64::EPSILON);
}

#[test]
fn crossing_reference_times() {
    let p = preset("crossing").unwrap();
    let out = run(&p.instance, &RunConfig::new(p.interval, 1.0, 101)).unwrap();
    assert!(out.report.passed);
    assert!((out.report.lp_sum - 1.0).abs() <= 1e-12);
    assert!((out.report.bound_rhs - 2.0).abs() <= 1e-12);
    let flow = track(&p.instance.a, &p.instance.c, &FlowConfig::uniform(101).unwrap()).unwrap();
    let clamped = clamp_all(&flow, p.interval).unwrap();
    let rising = clamped.iter().find(|c| c.entry.is_some()).unwrap();
    assert!((rising.entry.unwrap().t - p.reference["entry_t"]).abs() <= 1e-12);
    assert!((rising.exit.unwrap().t - p.reference["exit_t"]).abs() <= 1e-12);
}
