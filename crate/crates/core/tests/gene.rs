mod common;

use common::{example_model, example_spec, expr};
use perifix_core::certify::{
    CertificateStatus, bracket_converge, check_a1_quasimonotone, check_a2_input_monotone,
    check_a3_output_decreasing, check_bracket_condition, verify_box_invariance,
};
use perifix_core::genereg::{GeneSpec, build_gene_model, check_h, compute_box_x, slope_bound};
use perifix_core::integrate::{sample_trajectory, uniform_grid};
use perifix_core::model::{build_doubled, classify_cyclic};
use perifix_core::order::OrderInterval;
use perifix_core::poincare::{iterate_orbit, periodic_solution, poincare_map};
use perifix_core::sup_dist;
use proptest::prelude::*;

#[test]
fn example_slope_bound() {
    let b = slope_bound(&example_spec(), 1000).unwrap();
    assert!((b.alpha - 2.4).abs() < 1e-9);
    assert!((b.max_neg_slope - 2.0).abs() < 1e-9);
    assert!(b.argmax.abs() < 1e-9);
    let h = check_h(&example_spec(), 1000).unwrap();
    assert!(h.passed());
    assert!((h.worst_margin - 0.4).abs() < 1e-9);
}

#[test]
fn example_box() {
    let x = compute_box_x(&example_spec());
    assert_eq!(x.lo(), &[0.0; 3]);
    for (a, b) in x.hi().iter().zip([1.0, 1.0, 5.0 / 6.0]) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn steeper_feedback_fails_h() {
    let spec = GeneSpec::new(
        vec![expr("2"), expr("1"), expr("2 - 0.8*sin(2*pi*t/5)")],
        expr("4/(1+u)"),
        5.0,
    )
    .unwrap();
    let h = check_h(&spec, 1000).unwrap();
    assert!(!h.passed());
    assert!(h.worst_margin < 0.0);
    assert!(!h.witnesses.is_empty());
}

#[test]
fn generated_model_is_negative_cyclic_feedback() {
    let sig = classify_cyclic(&example_model(), 64).unwrap();
    assert_eq!(sig.deltas, vec![-1, 1, 1]);
    assert!(sig.is_negative_feedback());
}

#[test]
fn certification_pipeline() {
    let m = example_model();
    for r in [
        check_a1_quasimonotone(&m, 256, 7),
        check_a2_input_monotone(&m, 256, 7),
        check_a3_output_decreasing(&m, 256, 7),
        verify_box_invariance(&m, m.state_box(), 16, 64, 7).unwrap(),
    ] {
        assert!(r.passed(), "{r:?}");
    }
    let d = build_doubled(&m);
    let bx = m.state_box();
    let s = m.settings();
    assert!(
        check_bracket_condition(&d, bx.lo(), bx.hi(), &s)
            .unwrap()
            .passed()
    );
    let c = bracket_converge(&d, bx.lo(), bx.hi(), 1e-6, 1e-8, 500, &s).unwrap();
    assert_eq!(c.status, CertificateStatus::Converged);
    assert!(c.gap < 1e-6 && c.iterations <= 500);
    assert!(c.fixed_point_residual.unwrap() < 1e-8);
    let n = m.dim();
    for (k, step) in c.chain_log.iter().enumerate() {
        assert_eq!(step.iteration, k + 1);
        assert!(step.min_margin() >= -c.eps);
    }
    // q mirrors p: the limits of the two chains coincide up to the gap
    assert!(sup_dist(&c.p[..n], &c.q[n..]) <= c.gap + 1e-12);
    let r = c.r.unwrap();
    let tr = periodic_solution(&m, &r, 100, 1e-8, &s).unwrap();
    assert!(sup_dist(tr.states.last().unwrap(), &r) < 1e-7);

    // the bracket limit is the long-run state of an arbitrary orbit
    let o = iterate_orbit(&m, &[0.5, 0.5, 5.0 / 12.0], 60, &s).unwrap();
    assert!(sup_dist(o.last(), &r) < 1e-4);
}

#[test]
fn fixed_point_bracket_is_immediately_converged() {
    let m = example_model();
    let d = build_doubled(&m);
    let s = m.settings();
    let bx = m.state_box();
    let r = bracket_converge(&d, bx.lo(), bx.hi(), 1e-9, 1e-8, 500, &s)
        .unwrap()
        .r
        .unwrap();
    let c = bracket_converge(&d, &r, &r, 1e-6, 1e-8, 500, &s).unwrap();
    assert_eq!(c.status, CertificateStatus::Converged);
    assert_eq!(c.iterations, 0);
    assert!(check_bracket_condition(&d, &r, &r, &s).unwrap().passed());
}

#[test]
fn negative_controls() {
    let m = example_model();
    let small =
        check_bracket_condition(&build_doubled(&m), &[0.0; 3], &[0.1; 3], &m.settings()).unwrap();
    assert!(!small.passed() && small.worst_margin < 0.0);

    let shrunk =
        OrderInterval::new(m.cone().clone(), vec![0.0; 3], vec![0.5, 1.0, 5.0 / 6.0]).unwrap();
    let r = verify_box_invariance(&m, &shrunk, 16, 64, 3).unwrap();
    assert!(!r.passed() && r.worst_margin < 0.0);
    assert_eq!(r.witnesses[0].label, "x1=hi");
}

#[test]
fn orbit_from_origin_settles() {
    let m = example_model();
    let o = iterate_orbit(&m, &[0.0; 3], 40, &m.settings()).unwrap();
    assert!(*o.residuals.last().unwrap() < 1e-6);
    assert!(o.tail_diameter() < 1e-5);
}

#[test]
fn trajectory_stays_in_x() {
    let m = example_model();
    let grid = uniform_grid(0.0, 50.0, 1000);
    let tr = sample_trajectory(&m, 0.0, &[0.0; 3], &grid, &m.settings()).unwrap();
    for x in &tr.states {
        assert!(m.state_box().contains(x, 1e-8).unwrap(), "{x:?}");
    }
    let s = m.settings();
    let x = tr.states.last().unwrap();
    assert!(sup_dist(&poincare_map(&m, x, &s).unwrap(), x) < 1e-6);
}

fn random_spec() -> impl Strategy<Value = GeneSpec> {
    (
        2usize..=5,
        prop::collection::vec(0.5..3.0f64, 5),
        0.0..0.9f64,
        1.0..10.0f64,
        (0.5..5.0f64, 0.2..2.0f64, 1u32..=3),
    )
        .prop_map(|(n, a, eps, tau, (beta, theta, hill))| {
            let mut alphas: Vec<_> = a[..n - 1].iter().map(|v| expr(&v.to_string())).collect();
            alphas.push(expr(&format!(
                "{} * (1 + {eps}*sin(2*pi*t/{tau}))",
                a[n - 1]
            )));
            let g = expr(&format!("{beta}/(1 + (u/{theta})^{hill})"));
            GeneSpec::new(alphas, g, tau).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn comfortable_h_margin_implies_convergence(spec in random_spec()) {
        let b = slope_bound(&spec, 1000).unwrap();
        prop_assume!(b.margin() > 0.2 * b.alpha);
        let m = build_gene_model(&spec).unwrap();
        let bx = m.state_box();
        let d = build_doubled(&m);
        let s = m.settings();
        prop_assert!(verify_box_invariance(&m, bx, 8, 32, 1).unwrap().passed());
        prop_assert!(check_bracket_condition(&d, bx.lo(), bx.hi(), &s).unwrap().passed());
        let c = bracket_converge(&d, bx.lo(), bx.hi(), 1e-6, 1e-6, 500, &s).unwrap();
        prop_assert_eq!(c.status, CertificateStatus::Converged, "{:?}", c.violation);
    }
}
