//! Numerical checks of the monotonicity hypotheses and the bracketing iteration.
//!
//! The hypotheses on `f` and `h` are checked in differential form: for orthant cones,
//! quasimonotonicity of `x ↦ f(t, x, u)` is the Kamke condition on the off-diagonal entries of
//! `∂f/∂x`, monotonicity in `u` is a sign condition on `∂f/∂u` and an order-reversing output is a
//! sign condition on `∂h/∂x`. Entries are estimated by central differences at seeded
//! quasi-random points, so a pass is evidence, not proof.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::integrate::{IntegratorSettings, Stepper};
use crate::model::{ClosedLoopModel, DoubledModel, EvalError, fd_jacobian};
use crate::order::OrderInterval;
use crate::poincare::{doubled_map, poincare_map};
use crate::{Error, QuasiRandom, Result, sup_dist, sup_norm};

/// Slack for the Jacobian sign checks; above central-difference noise.
pub const JACOBIAN_EPS: f64 = 1e-7;
/// Slack for the face tests of [`verify_box_invariance`].
pub const BOX_EPS: f64 = 1e-8;
/// Slack for the monotone-chain assertions of [`bracket_converge`].
pub const CHAIN_EPS: f64 = 1e-8;
const MAX_WITNESSES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Verdict {
    Pass,
    Fail,
    Indeterminate,
}

/// A sample point together with the margin it produced.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Witness {
    pub label: String,
    pub point: Vec<f64>,
    pub margin: f64,
}

/// Outcome of one sampled check. `worst_margin` is signed: the check passes iff it is at least
/// `-eps` (for strict checks, `eps = 0` and the margin must be positive). `+∞` means no
/// condition applied.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CheckResult {
    pub name: String,
    pub verdict: Verdict,
    pub worst_margin: f64,
    pub eps: f64,
    pub witnesses: Vec<Witness>,
    pub samples_used: usize,
    pub seed: Option<u64>,
    pub note: Option<String>,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Accumulates margins, keeping the worst few as witnesses.
struct Margins {
    eps: f64,
    worst: f64,
    witnesses: Vec<Witness>,
    samples: usize,
    failure: Option<(String, Vec<f64>, EvalError)>,
}

impl Margins {
    fn new(eps: f64) -> Self {
        Margins {
            eps,
            worst: f64::INFINITY,
            witnesses: Vec::new(),
            samples: 0,
            failure: None,
        }
    }

    fn record(&mut self, label: impl FnOnce() -> String, point: &[f64], margin: f64) {
        self.worst = self.worst.min(margin);
        let full = self.witnesses.len() >= MAX_WITNESSES;
        if full && self.witnesses.last().is_some_and(|w| w.margin <= margin) {
            return;
        }
        if full {
            self.witnesses.pop();
        }
        let at = self.witnesses.partition_point(|w| w.margin <= margin);
        self.witnesses.insert(
            at,
            Witness {
                label: label(),
                point: point.to_vec(),
                margin,
            },
        );
    }

    fn fail_eval(&mut self, label: String, point: &[f64], err: EvalError) {
        if self.failure.is_none() {
            self.failure = Some((label, point.to_vec(), err));
        }
    }

    fn finish(self, name: &str, seed: Option<u64>) -> CheckResult {
        let (verdict, note, witnesses) = match self.failure {
            Some((label, point, err)) => {
                let note = format!("evaluation failed at {label}: {err}");
                let w = Witness {
                    label,
                    point,
                    margin: f64::NAN,
                };
                (Verdict::Indeterminate, Some(note), vec![w])
            }
            None if self.worst >= -self.eps => (Verdict::Pass, None, self.witnesses),
            None => (Verdict::Fail, None, self.witnesses),
        };
        CheckResult {
            name: name.into(),
            verdict,
            worst_margin: self.worst,
            eps: self.eps,
            witnesses,
            samples_used: self.samples,
            seed,
            note,
        }
    }
}

/// Sample `(t, x, u)` with `u = h(x')` for an independent `x' ∈ X`, so inputs range over `h(X)`.
fn sample_txu(
    mdl: &ClosedLoopModel,
    q: &mut QuasiRandom,
) -> (f64, Vec<f64>, core::result::Result<Vec<f64>, EvalError>) {
    let n = mdl.dim();
    let p = q.next_point();
    let t = p[0] * mdl.period();
    let x = mdl.state_box().point_at(&p[1..=n]);
    let xu = mdl.state_box().point_at(&p[n + 1..]);
    let mut u = vec![0.0; mdl.input_dim()];
    let u = mdl.eval_output(&xu, &mut u).map(|_| u);
    (t, x, u)
}

fn point_txu(t: f64, x: &[f64], u: &[f64]) -> Vec<f64> {
    let mut p = Vec::with_capacity(1 + x.len() + u.len());
    p.push(t);
    p.extend_from_slice(x);
    p.extend_from_slice(u);
    p
}

/// Kamke condition: `s_i s_j ∂f_i/∂x_j ≥ 0` for `i ≠ j`, `u` held fixed.
pub fn check_a1_quasimonotone(mdl: &ClosedLoopModel, samples: usize, seed: u64) -> CheckResult {
    let n = mdl.dim();
    let k = mdl.cone();
    let mut q = QuasiRandom::new(1 + 2 * n, seed);
    let mut acc = Margins::new(JACOBIAN_EPS);
    for _ in 0..samples {
        let (t, x, u) = sample_txu(mdl, &mut q);
        acc.samples += 1;
        let u = match u {
            Ok(u) => u,
            Err(e) => {
                acc.fail_eval("h".into(), &point_txu(t, &x, &[]), e);
                break;
            }
        };
        let at = point_txu(t, &x, &u);
        match fd_jacobian(n, &x, |xx, out| mdl.eval_open_loop(t, xx, &u, out)) {
            Ok(jac) => {
                for (i, row) in jac.iter().enumerate() {
                    for (j, v) in row.iter().enumerate() {
                        if i != j {
                            let m = k.sign(i) * k.sign(j) * v;
                            acc.record(|| format!("df{}/dx{}", i + 1, j + 1), &at, m);
                        }
                    }
                }
            }
            Err(e) => {
                acc.fail_eval("f".into(), &at, e);
                break;
            }
        }
    }
    acc.finish("A1_quasimonotone", Some(seed))
}

/// `s_i σ_k ∂f_i/∂u_k ≥ 0`, with `σ` the input cone signs.
pub fn check_a2_input_monotone(mdl: &ClosedLoopModel, samples: usize, seed: u64) -> CheckResult {
    let n = mdl.dim();
    let (k, ku) = (mdl.cone(), mdl.input_cone());
    let mut q = QuasiRandom::new(1 + 2 * n, seed);
    let mut acc = Margins::new(JACOBIAN_EPS);
    for _ in 0..samples {
        let (t, x, u) = sample_txu(mdl, &mut q);
        acc.samples += 1;
        let u = match u {
            Ok(u) => u,
            Err(e) => {
                acc.fail_eval("h".into(), &point_txu(t, &x, &[]), e);
                break;
            }
        };
        let at = point_txu(t, &x, &u);
        match fd_jacobian(n, &u, |uu, out| mdl.eval_open_loop(t, &x, uu, out)) {
            Ok(jac) => {
                for (i, row) in jac.iter().enumerate() {
                    for (j, v) in row.iter().enumerate() {
                        let m = k.sign(i) * ku.sign(j) * v;
                        acc.record(|| format!("df{}/du{}", i + 1, j + 1), &at, m);
                    }
                }
            }
            Err(e) => {
                acc.fail_eval("f".into(), &at, e);
                break;
            }
        }
    }
    acc.finish("A2_input_monotone", Some(seed))
}

/// `σ_k s_j ∂h_k/∂x_j ≤ 0`; the margin is the negated entry.
pub fn check_a3_output_decreasing(mdl: &ClosedLoopModel, samples: usize, seed: u64) -> CheckResult {
    let n = mdl.dim();
    let m = mdl.input_dim();
    let (k, ku) = (mdl.cone(), mdl.input_cone());
    let mut q = QuasiRandom::new(n, seed);
    let mut acc = Margins::new(JACOBIAN_EPS);
    for _ in 0..samples {
        let x = mdl.state_box().point_at(&q.next_point());
        acc.samples += 1;
        match fd_jacobian(m, &x, |xx, out| mdl.eval_output(xx, out)) {
            Ok(jac) => {
                for (i, row) in jac.iter().enumerate() {
                    for (j, v) in row.iter().enumerate() {
                        let margin = -(ku.sign(i) * k.sign(j) * v);
                        acc.record(|| format!("dh{}/dx{}", i + 1, j + 1), &x, margin);
                    }
                }
            }
            Err(e) => {
                acc.fail_eval("h".into(), &x, e);
                break;
            }
        }
    }
    acc.finish("A3_output_decreasing", Some(seed))
}

/// Displacement form of the integral bracket condition: with `a0 = (x0, y0)`, requires
/// `T̃ a0 ⩾_C a0`, i.e. the lower corner moves up and the upper corner moves down over one
/// period of the doubled flow.
pub fn check_bracket_condition(
    dm: &DoubledModel,
    x0: &[f64],
    y0: &[f64],
    s: &IntegratorSettings,
) -> Result<CheckResult> {
    let n = dm.base().dim();
    let k = dm.base().cone();
    Error::check_dim("x0", n, x0.len())?;
    Error::check_dim("y0", n, y0.len())?;
    if !k.leq(x0, y0, 0.0)? {
        return Err(Error::Precondition(format!(
            "x0 = {x0:?} is not below y0 = {y0:?} in the cone {k}"
        )));
    }
    let a0: Vec<f64> = x0.iter().chain(y0).copied().collect();
    let ta0 = doubled_map(dm, &a0, s)?;
    let mut acc = Margins::new(1e-8 * (1.0 + sup_norm(y0)));
    acc.samples = 1;
    for i in 0..n {
        let lower = k.sign(i) * (ta0[i] - x0[i]);
        acc.record(|| format!("lower[{}]", i + 1), &ta0, lower);
        let upper = k.sign(i) * (y0[i] - ta0[n + i]);
        acc.record(|| format!("upper[{}]", i + 1), &ta0, upper);
    }
    Ok(acc.finish("bracket_displacement", None))
}

/// Checks that the closed-loop field points weakly into `bx` on every face, at sampled face
/// points and times.
pub fn verify_box_invariance(
    mdl: &ClosedLoopModel,
    bx: &OrderInterval,
    time_samples: usize,
    face_samples: usize,
    seed: u64,
) -> Result<CheckResult> {
    let n = mdl.dim();
    Error::check_dim("box", n, bx.dim())?;
    let k = bx.cone();
    let mut q = QuasiRandom::new(n, seed);
    let mut qt = QuasiRandom::new(1, seed ^ 0x5eed_7173);
    let times: Vec<f64> = (0..time_samples)
        .map(|_| qt.next_point()[0] * mdl.period())
        .collect();
    let mut acc = Margins::new(BOX_EPS);
    let mut fx = vec![0.0; n];
    'outer: for _ in 0..face_samples {
        let base = bx.point_at(&q.next_point());
        for i in 0..n {
            for upper in [false, true] {
                let mut x = base.clone();
                x[i] = if upper { bx.hi()[i] } else { bx.lo()[i] };
                for &t in &times {
                    acc.samples += 1;
                    let mut at = vec![t];
                    at.extend_from_slice(&x);
                    if let Err(e) = crate::integrate::VectorField::eval(mdl, t, &x, &mut fx) {
                        acc.fail_eval(format!("x{}", i + 1), &at, e);
                        break 'outer;
                    }
                    let inward = if upper { -fx[i] } else { fx[i] };
                    let side = if upper { "hi" } else { "lo" };
                    acc.record(|| format!("x{}={side}", i + 1), &at, k.sign(i) * inward);
                }
            }
        }
    }
    Ok(acc.finish("box_invariance", Some(seed)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CertificateStatus {
    Converged,
    MaxIters,
    BracketViolated,
    /// The chains met but the midpoint failed the fixed-point residual test.
    ResidualExceeded,
}

/// Margins of one bracketing step `a_{k−1} ⩽ a_k ⩽ b_k ⩽ b_{k−1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChainStep {
    pub iteration: usize,
    pub gap: f64,
    pub lower_margin: f64,
    pub cross_margin: f64,
    pub upper_margin: f64,
}

impl ChainStep {
    pub fn min_margin(&self) -> f64 {
        self.lower_margin
            .min(self.cross_margin)
            .min(self.upper_margin)
    }
}

/// Result of iterating `T̃` from `a0 = (x0, y0)` and `b0 = (y0, x0)`.
///
/// A gap below `tol` shows the two limits coincide numerically; uniqueness of the periodic
/// solution is then an empirical finding, not a proof.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConvergenceCertificate {
    pub status: CertificateStatus,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub gap: f64,
    pub initial_gap: f64,
    pub iterations: usize,
    pub chain_log: Vec<ChainStep>,
    pub r: Option<Vec<f64>>,
    pub fixed_point_residual: Option<f64>,
    pub tol: f64,
    pub residual_tol: f64,
    pub eps: f64,
    pub violation: Option<String>,
}

impl ConvergenceCertificate {
    pub fn converged(&self) -> bool {
        self.status == CertificateStatus::Converged
    }
}

/// Iterates the doubled Poincaré map from the corners of `[x0, y0]_K` until the two monotone
/// chains meet.
pub fn bracket_converge(
    dm: &DoubledModel,
    x0: &[f64],
    y0: &[f64],
    tol: f64,
    residual_tol: f64,
    max_iters: usize,
    s: &IntegratorSettings,
) -> Result<ConvergenceCertificate> {
    let base = dm.base();
    let n = base.dim();
    let k = base.cone();
    let c = dm.cone();
    Error::check_dim("x0", n, x0.len())?;
    Error::check_dim("y0", n, y0.len())?;
    if !k.leq(x0, y0, 0.0)? {
        return Err(Error::Precondition(format!(
            "x0 = {x0:?} is not below y0 = {y0:?} in the cone {k}"
        )));
    }
    let tau = dm.period();
    let s = s.for_period(tau);
    let mut a: Vec<f64> = x0.iter().chain(y0).copied().collect();
    let mut b: Vec<f64> = y0.iter().chain(x0).copied().collect();
    let initial_gap = sup_dist(&a, &b);
    let mut gap = initial_gap;
    let mut log = Vec::new();
    let mut status = CertificateStatus::MaxIters;
    let mut violation = None;
    let mut iterations = 0;

    if gap < tol {
        status = CertificateStatus::Converged;
    } else {
        let mut sa = Stepper::new(dm, 0.0, &a, &s)?;
        let mut sb = Stepper::new(dm, 0.0, &b, &s)?;
        for it in 1..=max_iters {
            let t = it as f64 * tau;
            sa.advance_to(t)?;
            sb.advance_to(t)?;
            let (na, nb) = (sa.state().to_vec(), sb.state().to_vec());
            let new_gap = sup_dist(&na, &nb);
            let step = ChainStep {
                iteration: it,
                gap: new_gap,
                lower_margin: c.margin(&a, &na)?,
                cross_margin: c.margin(&na, &nb)?,
                upper_margin: c.margin(&nb, &b)?,
            };
            log.push(step);
            a = na;
            b = nb;
            iterations = it;
            if step.min_margin() < -CHAIN_EPS {
                status = CertificateStatus::BracketViolated;
                violation = Some(format!(
                    "chain order broken at iteration {it}: lower {:e}, cross {:e}, upper {:e}",
                    step.lower_margin, step.cross_margin, step.upper_margin
                ));
                gap = new_gap;
                break;
            }
            if new_gap > gap + CHAIN_EPS {
                status = CertificateStatus::BracketViolated;
                violation = Some(format!(
                    "gap increased at iteration {it}: {gap:e} -> {new_gap:e}"
                ));
                gap = new_gap;
                break;
            }
            gap = new_gap;
            if gap < tol {
                status = CertificateStatus::Converged;
                break;
            }
        }
    }

    let (mut r, mut residual) = (None, None);
    if status == CertificateStatus::Converged {
        let mid: Vec<f64> = a[..n]
            .iter()
            .zip(&a[n..])
            .map(|(u, v)| 0.5 * (u + v))
            .collect();
        let res = sup_dist(&poincare_map(base, &mid, &s)?, &mid);
        if !(res < residual_tol) {
            status = CertificateStatus::ResidualExceeded;
        }
        r = Some(mid);
        residual = Some(res);
    }
    Ok(ConvergenceCertificate {
        status,
        p: a,
        q: b,
        gap,
        initial_gap,
        iterations,
        chain_log: log,
        r,
        fixed_point_residual: residual,
        tol,
        residual_tol,
        eps: CHAIN_EPS,
        violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelDefinition, build_doubled, parse_expr};
    use crate::order::OrthantCone;

    fn model(f: &[&str], h: &[&str], lo: Vec<f64>, hi: Vec<f64>) -> ClosedLoopModel {
        let n = f.len();
        ClosedLoopModel::new(ModelDefinition {
            period: 5.0,
            f: f.iter().map(|s| parse_expr(s).unwrap()).collect(),
            h: h.iter().map(|s| parse_expr(s).unwrap()).collect(),
            state_box: OrderInterval::new(OrthantCone::nonnegative(n), lo, hi).unwrap(),
            input_cone: None,
            settings: IntegratorSettings::default(),
        })
        .unwrap()
    }

    fn gene() -> ClosedLoopModel {
        model(
            &["u - 2*x1", "x1 - x2", "x2 - (2 - 0.8*sin(2*pi*t/5))*x3"],
            &["2/(1+x3)"],
            vec![0.0; 3],
            vec![1.0, 1.0, 5.0 / 6.0],
        )
    }

    #[test]
    fn gene_open_loop_hypotheses_hold() {
        let m = gene();
        let a1 = check_a1_quasimonotone(&m, 64, 1);
        assert!(a1.passed(), "{a1:?}");
        assert!(a1.worst_margin.abs() < JACOBIAN_EPS);
        let a2 = check_a2_input_monotone(&m, 64, 1);
        assert!(a2.passed());
        assert!(a2.worst_margin.abs() < JACOBIAN_EPS);
        assert!(
            a2.witnesses
                .iter()
                .all(|w| w.label == "df2/du1" || w.label == "df3/du1")
        );
        let a3 = check_a3_output_decreasing(&m, 64, 1);
        assert!(a3.passed(), "{a3:?}");
        assert_eq!(a3.samples_used, 64);
        assert_eq!(a3.seed, Some(1));
    }

    #[test]
    fn input_sensitivity_of_first_component_is_one() {
        let m = model(&["u - 2*x1"], &["2/(1+x1)"], vec![0.0], vec![1.0]);
        let a2 = check_a2_input_monotone(&m, 16, 3);
        assert!(a2.passed());
        assert!((a2.worst_margin - 1.0).abs() < 1e-8);
    }

    #[test]
    fn negative_off_diagonal_fails_a1() {
        let m = model(&["-x2", "-x2"], &["x1"], vec![0.0; 2], vec![1.0; 2]);
        let r = check_a1_quasimonotone(&m, 32, 0);
        assert_eq!(r.verdict, Verdict::Fail);
        assert!((r.worst_margin + 1.0).abs() < 1e-8);
        assert!(!r.witnesses.is_empty() && r.witnesses.len() <= MAX_WITNESSES);
        assert_eq!(r.witnesses[0].label, "df1/dx2");
    }

    #[test]
    fn scalar_a1_is_vacuous() {
        let m = model(&["-x1"], &["x1"], vec![0.0], vec![1.0]);
        let r = check_a1_quasimonotone(&m, 8, 0);
        assert!(r.passed());
        assert_eq!(r.worst_margin, f64::INFINITY);
    }

    #[test]
    fn a2_a3_failures_and_flat_cases() {
        let m = model(&["-u - x1"], &["x1"], vec![0.0], vec![1.0]);
        assert_eq!(check_a2_input_monotone(&m, 8, 0).verdict, Verdict::Fail);
        assert_eq!(check_a3_output_decreasing(&m, 8, 0).verdict, Verdict::Fail);
        let flat = model(&["-x1"], &["3"], vec![0.0], vec![1.0]);
        let a2 = check_a2_input_monotone(&flat, 8, 0);
        assert!(a2.passed() && a2.worst_margin == 0.0);
        let a3 = check_a3_output_decreasing(&flat, 8, 0);
        assert!(a3.passed() && a3.worst_margin == 0.0);
    }

    #[test]
    fn evaluation_error_is_indeterminate() {
        let m = model(&["u - x1"], &["sqrt(x1 - 0.5)"], vec![0.5], vec![1.0]);
        let wider = OrderInterval::new(OrthantCone::nonnegative(1), vec![0.0], vec![1.0]).unwrap();
        let r = verify_box_invariance(&m, &wider, 2, 2, 0).unwrap();
        assert_eq!(r.verdict, Verdict::Indeterminate);
        assert!(r.note.unwrap().contains("sqrt"));
        assert_eq!(r.witnesses.len(), 1);
    }

    #[test]
    fn gene_box_is_invariant() {
        let m = gene();
        let r = verify_box_invariance(&m, m.state_box(), 16, 32, 0).unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn shrunken_box_leaks_on_first_face() {
        let m = gene();
        let bx = OrderInterval::new(
            OrthantCone::nonnegative(3),
            vec![0.0; 3],
            vec![0.5, 1.0, 5.0 / 6.0],
        )
        .unwrap();
        let r = verify_box_invariance(&m, &bx, 8, 32, 0).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(r.worst_margin < -0.9);
        assert_eq!(r.witnesses[0].label, "x1=hi");
    }

    #[test]
    fn zero_field_box_margin_is_zero() {
        let m = model(&["0", "0"], &["x1"], vec![0.0; 2], vec![1.0; 2]);
        let r = verify_box_invariance(&m, m.state_box(), 4, 4, 0).unwrap();
        assert!(r.passed());
        assert_eq!(r.worst_margin, 0.0);
    }

    #[test]
    fn gene_corners_satisfy_bracket_condition() {
        let m = gene();
        let d = build_doubled(&m);
        let r =
            check_bracket_condition(&d, &[0.0; 3], &[1.0, 1.0, 5.0 / 6.0], &m.settings()).unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn small_upper_corner_fails_bracket_condition() {
        let m = gene();
        let d = build_doubled(&m);
        let r = check_bracket_condition(&d, &[0.0; 3], &[0.1; 3], &m.settings()).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(r.witnesses[0].label.starts_with("upper"));
    }

    #[test]
    fn unordered_corners_are_a_precondition_error() {
        let m = model(&["-x1 + u"], &["-x1"], vec![0.0], vec![1.0]);
        let d = build_doubled(&m);
        let s = m.settings();
        assert!(matches!(
            check_bracket_condition(&d, &[1.0], &[0.0], &s),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            bracket_converge(&d, &[1.0], &[0.0], 1e-6, 1e-8, 10, &s),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn gene_bracketing_converges() {
        let m = gene();
        let d = build_doubled(&m);
        let cert = bracket_converge(
            &d,
            &[0.0; 3],
            &[1.0, 1.0, 5.0 / 6.0],
            1e-6,
            1e-8,
            500,
            &m.settings(),
        )
        .unwrap();
        assert_eq!(cert.status, CertificateStatus::Converged, "{cert:?}");
        assert!(cert.gap < 1e-6);
        assert!(cert.fixed_point_residual.unwrap() < 1e-8);
        for w in cert.chain_log.windows(2) {
            assert!(w[1].gap <= w[0].gap + CHAIN_EPS);
        }
        assert!(cert.chain_log.iter().all(|s| s.min_margin() >= -CHAIN_EPS));

        // starting at the fixed point converges immediately
        let r = cert.r.clone().unwrap();
        let again = bracket_converge(&d, &r, &r, 1e-6, 1e-8, 500, &m.settings()).unwrap();
        assert_eq!(again.status, CertificateStatus::Converged);
        assert_eq!(again.iterations, 0);
        assert_eq!(again.gap, 0.0);
        let disp = check_bracket_condition(&d, &r, &r, &m.settings()).unwrap();
        assert!(disp.passed() && disp.worst_margin.abs() < 1e-8, "{disp:?}");
    }

    #[test]
    fn iteration_budget_exhausted() {
        let m = gene();
        let d = build_doubled(&m);
        let cert = bracket_converge(
            &d,
            &[0.0; 3],
            &[1.0, 1.0, 5.0 / 6.0],
            1e-6,
            1e-8,
            2,
            &m.settings(),
        )
        .unwrap();
        assert_eq!(cert.status, CertificateStatus::MaxIters);
        assert_eq!(cert.iterations, 2);
        assert!(cert.r.is_none());
    }

    #[test]
    fn positive_feedback_breaks_the_chain() {
        // h increasing: the doubled flow pushes the upper corner up
        let m = model(&["u"], &["x1"], vec![0.0], vec![1.0]);
        let d = build_doubled(&m);
        let cert = bracket_converge(&d, &[0.0], &[1.0], 1e-9, 1e-8, 50, &m.settings()).unwrap();
        assert_ne!(cert.status, CertificateStatus::Converged);
    }
}
