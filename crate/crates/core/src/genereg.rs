//! Cyclic gene-regulatory model with periodically forced degradation of the last species:
//!
//! ```text
//! ẋ1 = g(x_n) − α1 x1
//! ẋi = x_{i−1} − αi xi          (2 ≤ i ≤ n−1)
//! ẋn = x_{n−1} − αn(t) xn
//! ```
//!
//! with constant `α1..α_{n−1} > 0`, `τ`-periodic `αn(t) > 0`, `g(0) > 0` and `g' < 0`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::certify::{CheckResult, JACOBIAN_EPS, Verdict, Witness};
use crate::integrate::IntegratorSettings;
use crate::model::{BinOp, ClosedLoopModel, Expr, ModelDefinition, diff_expr_numeric};
use crate::order::{OrderInterval, OrthantCone};
use crate::{Error, Result};

/// Grid resolution for locating `min αn(t)` over one period.
pub const ALPHA_GRID: usize = 10_000;
/// Positivity floor for the sampled `αi`.
pub const POSITIVITY_EPS: f64 = 1e-10;
/// Grid resolution for the sign check of `g'` in [`build_gene_model`].
pub const SLOPE_GRID: usize = 1_000;

#[derive(Debug, Clone)]
pub struct GeneSpec {
    alphas: Vec<Expr>,
    g: Expr,
    tau: f64,
    alpha_consts: Vec<f64>,
    alpha_n_min: f64,
    alpha_n_argmin: f64,
    g0: f64,
}

fn eval_at(e: &Expr, name: &str, v: f64) -> Result<f64> {
    e.eval(&[(name, v)])
        .map_err(|source| Error::Eval { t: v, source })
}

/// Golden-section search for a minimiser of `f` on `[a, b]`.
fn golden_min(mut f: impl FnMut(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    let inv_phi = (libm::sqrt(5.0) - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..200 {
        if (b - a) <= 1e-13 * (1.0 + libm::fabs(a) + libm::fabs(b)) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc < fd { (c, fc) } else { (d, fd) })
}

/// Minimum of `f` on `[a, b]`: a uniform grid of `points + 1` nodes, then golden-section
/// refinement between the neighbours of the best node.
fn grid_min(
    mut f: impl FnMut(f64) -> Result<f64>,
    a: f64,
    b: f64,
    points: usize,
) -> Result<(f64, f64)> {
    let points = points.max(2);
    let node = |k: usize| {
        if k == points {
            b
        } else {
            a + (b - a) * k as f64 / points as f64
        }
    };
    let mut best = (a, f(a)?);
    for k in 1..=points {
        let x = node(k);
        let v = f(x)?;
        if v < best.1 {
            best = (x, v);
        }
    }
    let k = libm::round((best.0 - a) / (b - a) * points as f64) as usize;
    let lo = node(k.saturating_sub(1));
    let hi = node((k + 1).min(points));
    if hi > lo {
        let refined = golden_min(&mut f, lo, hi)?;
        if refined.1 < best.1 {
            best = refined;
        }
    }
    Ok(best)
}

impl GeneSpec {
    /// Validates structure and positivity: `n ≥ 2`, constant positive `α1..α_{n−1}`, `αn` a
    /// function of `t` only and positive over a period, `g` a function of `u` with `g(0) > 0`.
    pub fn new(alphas: Vec<Expr>, g: Expr, tau: f64) -> Result<Self> {
        let n = alphas.len();
        if n < 2 {
            return Err(Error::InvalidModel(format!(
                "gene model needs at least 2 species, got {n}"
            )));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "period must be positive, got {tau}"
            )));
        }
        let mut alpha_consts = Vec::with_capacity(n - 1);
        for (i, a) in alphas[..n - 1].iter().enumerate() {
            if !a.is_constant() {
                return Err(Error::InvalidModel(format!(
                    "alpha[{i}] must be constant, uses {:?}",
                    a.free_vars()
                )));
            }
            let v = a.eval(&[]).map_err(|source| Error::Unbound {
                field: format!("alpha[{i}]"),
                source,
            })?;
            if !(v > POSITIVITY_EPS) {
                return Err(Error::InvalidModel(format!(
                    "alpha[{i}] = {v} is not positive"
                )));
            }
            alpha_consts.push(v);
        }
        let last = &alphas[n - 1];
        if let Some(v) = last.free_vars().into_iter().find(|v| v != "t") {
            return Err(Error::InvalidModel(format!(
                "alpha[{}] may only depend on t, found `{v}`",
                n - 1
            )));
        }
        if let Some(v) = g.free_vars().into_iter().find(|v| v != "u") {
            return Err(Error::InvalidModel(format!(
                "g may only depend on u, found `{v}`"
            )));
        }
        let (argmin, min) = grid_min(|t| eval_at(last, "t", t), 0.0, tau, ALPHA_GRID)?;
        if !(min > POSITIVITY_EPS) {
            return Err(Error::InvalidModel(format!(
                "alpha[{}](t) is not positive: minimum {min} at t = {argmin}",
                n - 1
            )));
        }
        let g0 = eval_at(&g, "u", 0.0)?;
        if !(g0 > 0.0) {
            return Err(Error::InvalidModel(format!("g(0) = {g0} must be positive")));
        }
        Ok(GeneSpec {
            alphas,
            g,
            tau,
            alpha_consts,
            alpha_n_min: min,
            alpha_n_argmin: argmin,
            g0,
        })
    }

    pub fn n(&self) -> usize {
        self.alphas.len()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn alphas(&self) -> &[Expr] {
        &self.alphas
    }

    pub fn g(&self) -> &Expr {
        &self.g
    }

    pub fn g0(&self) -> f64 {
        self.g0
    }

    /// `min_{0 ≤ t ≤ τ} αn(t)` and where it is attained.
    pub fn alpha_n_min(&self) -> (f64, f64) {
        (self.alpha_n_min, self.alpha_n_argmin)
    }

    /// `α1, …, α_{n−1}, min αn`.
    pub fn effective_alphas(&self) -> Vec<f64> {
        let mut a = self.alpha_consts.clone();
        a.push(self.alpha_n_min);
        a
    }

    /// `α = α1 ⋯ α_{n−1} · min αn`.
    pub fn alpha_product(&self) -> f64 {
        self.effective_alphas().iter().product()
    }
}

/// `X = [0, g(0)(1/α1, 1/(α1α2), …, 1/(α1⋯αn))]` with `αn` replaced by its minimum.
pub fn compute_box_x(spec: &GeneSpec) -> OrderInterval {
    let mut prod = 1.0;
    let hi: Vec<f64> = spec
        .effective_alphas()
        .iter()
        .map(|a| {
            prod *= a;
            spec.g0 / prod
        })
        .collect();
    OrderInterval::new(OrthantCone::nonnegative(spec.n()), vec![0.0; spec.n()], hi)
        .expect("positive alphas and g(0) give an ordered box")
}

pub fn build_gene_model(spec: &GeneSpec) -> Result<ClosedLoopModel> {
    build_gene_model_with(spec, compute_box_x(spec), IntegratorSettings::default())
}

/// [`build_gene_model`] with an explicit state box and solver settings.
pub fn build_gene_model_with(
    spec: &GeneSpec,
    state_box: OrderInterval,
    settings: IntegratorSettings,
) -> Result<ClosedLoopModel> {
    let n = spec.n();
    let u_max = spec.g0 / spec.alpha_product();
    for k in 0..=SLOPE_GRID {
        let u = u_max * k as f64 / SLOPE_GRID as f64;
        let slope = diff_expr_numeric(&spec.g, "u", &[("u", u)])
            .map_err(|source| Error::Eval { t: u, source })?;
        // a flat start (Hill exponents above one) still leaves g strictly decreasing
        let ok = if k == 0 {
            slope <= JACOBIAN_EPS
        } else {
            slope < 0.0
        };
        if !ok {
            return Err(Error::InvalidModel(format!(
                "g must be strictly decreasing on [0, {u_max}], but g'({u}) = {slope}"
            )));
        }
    }
    let x = |i: usize| Expr::Var(format!("x{i}"));
    let decay = |i: usize| Expr::binary(BinOp::Mul, spec.alphas[i - 1].clone(), x(i));
    let mut f = Vec::with_capacity(n);
    f.push(Expr::binary(BinOp::Sub, Expr::var("u"), decay(1)));
    for i in 2..=n {
        f.push(Expr::binary(BinOp::Sub, x(i - 1), decay(i)));
    }
    let h = spec.g.substitute("u", &x(n));
    ClosedLoopModel::new(ModelDefinition {
        period: spec.tau,
        f,
        h: vec![h],
        state_box,
        input_cone: None,
        settings,
    })
}

/// The quantities entering the uniqueness condition `max{−g'(u) : 0 ≤ u ≤ g(0)/α} < α`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SlopeBound {
    pub alpha: f64,
    pub u_max: f64,
    pub max_neg_slope: f64,
    pub argmax: f64,
}

impl SlopeBound {
    pub fn margin(&self) -> f64 {
        self.alpha - self.max_neg_slope
    }
}

pub fn slope_bound(spec: &GeneSpec, grid_points: usize) -> Result<SlopeBound> {
    let alpha = spec.alpha_product();
    let u_max = spec.g0 / alpha;
    // the steepest descent of g is the minimum of g'
    let slope = |u: f64| -> Result<f64> {
        diff_expr_numeric(&spec.g, "u", &[("u", u)]).map_err(|source| Error::Eval { t: u, source })
    };
    let (argmax, slope) = grid_min(slope, 0.0, u_max, grid_points)?;
    Ok(SlopeBound {
        alpha,
        u_max,
        max_neg_slope: -slope,
        argmax,
    })
}

/// The uniqueness hypothesis as a check; passes iff the margin `α − max(−g')` is positive.
pub fn check_h(spec: &GeneSpec, grid_points: usize) -> Result<CheckResult> {
    let b = slope_bound(spec, grid_points)?;
    let margin = b.margin();
    Ok(CheckResult {
        name: String::from("H_slope_bound"),
        verdict: if margin > 0.0 {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
        worst_margin: margin,
        eps: 0.0,
        witnesses: vec![Witness {
            label: String::from("u"),
            point: vec![b.argmax],
            margin,
        }],
        samples_used: grid_points.max(2) + 1,
        seed: None,
        note: Some(format!(
            "alpha = {}, max(-g') = {} at u = {} on [0, {}]",
            b.alpha, b.max_neg_slope, b.argmax, b.u_max
        )),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_expr;
    use alloc::string::ToString;

    fn spec(alphas: &[&str], g: &str, tau: f64) -> Result<GeneSpec> {
        GeneSpec::new(
            alphas.iter().map(|a| parse_expr(a).unwrap()).collect(),
            parse_expr(g).unwrap(),
            tau,
        )
    }

    fn example() -> GeneSpec {
        spec(&["2", "1", "2 - (4/5)*sin(2*pi*t/5)"], "2/(1+u)", 5.0).unwrap()
    }

    #[test]
    fn forcing_minimum() {
        let (m, at) = example().alpha_n_min();
        assert!((m - 1.2).abs() < 1e-12);
        assert!((at - 1.25).abs() < 1e-6);
    }

    #[test]
    fn example_box() {
        let x = compute_box_x(&example());
        let want = [1.0, 1.0, 5.0 / 6.0];
        for (a, b) in x.hi().iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(x.lo(), &[0.0; 3]);
    }

    #[test]
    fn unit_box() {
        let x = compute_box_x(&spec(&["1", "1"], "1/(1+u)", 1.0).unwrap());
        assert_eq!(x.hi(), &[1.0, 1.0]);
    }

    #[test]
    fn box_scales_with_feedback_strength() {
        let base = compute_box_x(&example());
        let scaled = compute_box_x(
            &spec(&["2", "1", "2 - (4/5)*sin(2*pi*t/5)"], "4*(2/(1+u))", 5.0).unwrap(),
        );
        for (a, b) in base.hi().iter().zip(scaled.hi()) {
            assert_eq!(4.0 * a, *b);
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(spec(&["2", "-1", "1"], "2/(1+u)", 5.0).is_err());
        assert!(spec(&["2"], "2/(1+u)", 5.0).is_err());
        assert!(spec(&["2", "t", "1"], "2/(1+u)", 5.0).is_err());
        assert!(spec(&["2", "1", "sin(2*pi*t/5)"], "2/(1+u)", 5.0).is_err());
        assert!(spec(&["2", "1", "1"], "-1/(1+u)", 5.0).is_err());
        assert!(spec(&["2", "1", "1"], "x/(1+u)", 5.0).is_err());
        let increasing = spec(&["2", "1", "1"], "1 + u", 5.0).unwrap();
        let err = build_gene_model(&increasing).unwrap_err();
        assert!(err.to_string().contains("decreasing"), "{err}");
        let flat = spec(&["2", "1", "1"], "1", 5.0).unwrap();
        assert!(build_gene_model(&flat).is_err());
        let hill = spec(&["2", "1", "1"], "2/(1 + (u/0.5)^2)", 5.0).unwrap();
        assert!(build_gene_model(&hill).is_ok());
    }

    #[test]
    fn example_model_shape() {
        let m = build_gene_model(&example()).unwrap();
        assert_eq!(m.dim(), 3);
        assert_eq!(m.input_dim(), 1);
        assert_eq!(m.period(), 5.0);
        assert_eq!(m.f_exprs()[0].to_string(), "u - 2*x1");
        assert_eq!(m.f_exprs()[1].to_string(), "x1 - 1*x2");
        assert_eq!(m.h_exprs()[0].to_string(), "2/(1 + x3)");
        let v = m.eval_closed_loop_field(0.0, &[0.0; 3]).unwrap();
        assert_eq!(v, vec![2.0, 0.0, 0.0]);
    }

    #[test]
    fn slope_condition_on_example_spec() {
        let b = slope_bound(&example(), 1000).unwrap();
        assert!((b.alpha - 2.4).abs() < 1e-9);
        assert!((b.max_neg_slope - 2.0).abs() < 1e-9, "{}", b.max_neg_slope);
        assert_eq!(b.argmax, 0.0);
        let r = check_h(&example(), 1000).unwrap();
        assert!(r.passed());
        assert!((r.worst_margin - 0.4).abs() < 1e-9);
    }

    #[test]
    fn steep_feedback_fails_slope_condition() {
        let s = spec(&["2", "1", "2 - (4/5)*sin(2*pi*t/5)"], "4/(1+u)", 5.0).unwrap();
        let b = slope_bound(&s, 1000).unwrap();
        assert!((b.max_neg_slope - 4.0).abs() < 1e-8);
        assert!((b.u_max - 5.0 / 3.0).abs() < 1e-12);
        let r = check_h(&s, 1000).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(r.worst_margin < 0.0);
    }

    #[test]
    fn constant_feedback_passes() {
        let s = spec(&["2", "1", "1.5"], "1", 5.0).unwrap();
        let r = check_h(&s, 100).unwrap();
        assert!(r.passed());
        assert!((r.worst_margin - 3.0).abs() < 1e-9);
    }

    #[test]
    fn interior_maximum_is_refined() {
        // -g'(u) = 2u/(1+u^2)^2 ... peaks at u = 1/sqrt(3) with value 3*sqrt(3)/8
        let s = spec(&["1", "1"], "3 + 1/(1+u^2)", 1.0).unwrap();
        let b = slope_bound(&s, 7).unwrap();
        let want = 3.0 * libm::sqrt(3.0) / 8.0;
        assert!((b.max_neg_slope - want).abs() < 1e-9, "{}", b.max_neg_slope);
        assert!((b.argmax - 1.0 / libm::sqrt(3.0)).abs() < 1e-4);
    }
}
