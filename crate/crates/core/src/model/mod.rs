//! Closed-loop systems `ẋ = f(t, x, u)`, `u = h(x)` and their doubled embedding.

mod expr;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

pub use expr::{
    BinOp, Bindings, BoundExpr, EvalError, Expr, Func, ParseError, central_difference,
    diff_expr_numeric, eval_expr, parse_expr,
};

use crate::integrate::{IntegratorSettings, VectorField};
use crate::order::{OrderInterval, OrthantCone, product_cone};
use crate::{Error, QuasiRandom, Result, sup_dist, sup_norm};

/// Number of sampled `(t, x)` pairs used to confirm `F(t, x) = F(t + τ, x)`.
pub const PERIODICITY_SAMPLES: usize = 32;
/// Allowed periodicity defect, relative to `max(1, ‖F‖∞)`.
pub const PERIODICITY_TOL: f64 = 1e-10;
/// Partial derivatives at or below this magnitude count as zero.
pub const COUPLING_THRESHOLD: f64 = 1e-7;

/// Parses `text`, tagging errors with the document field it came from.
pub fn parse_field(field: &str, text: &str) -> Result<Expr> {
    parse_expr(text).map_err(|source| Error::Parse {
        field: field.into(),
        source,
    })
}

/// Everything needed to build a [`ClosedLoopModel`].
///
/// `f[i]` may use `t`, `x1..xn` and `u1..um` (plain `u` when `m = 1`); `h[k]` may use `x1..xn`.
#[derive(Debug, Clone)]
pub struct ModelDefinition {
    pub period: f64,
    pub f: Vec<Expr>,
    pub h: Vec<Expr>,
    pub state_box: OrderInterval,
    /// Order on the input space; `ℝ^m_+` when absent.
    pub input_cone: Option<OrthantCone>,
    pub settings: IntegratorSettings,
}

/// `ẋ = f(t, x, u)` closed by `u = h(x)`, with `τ`-periodic `f` on a state box `X`.
#[derive(Debug, Clone)]
pub struct ClosedLoopModel {
    n: usize,
    m: usize,
    period: f64,
    f_src: Vec<Expr>,
    h_src: Vec<Expr>,
    // slots: [t, x1..xn, u1..um]
    f: Vec<BoundExpr>,
    // slots: [x1..xn]
    h: Vec<BoundExpr>,
    state_box: OrderInterval,
    input_cone: OrthantCone,
    settings: IntegratorSettings,
}

fn index_suffix(name: &str, prefix: char, count: usize) -> Option<usize> {
    let rest = name.strip_prefix(prefix)?;
    if rest.starts_with('0') {
        return None;
    }
    let i: usize = rest.parse().ok()?;
    (1..=count).contains(&i).then_some(i)
}

impl ClosedLoopModel {
    pub fn new(def: ModelDefinition) -> Result<Self> {
        let n = def.state_box.dim();
        let m = def.h.len();
        if !(def.period > 0.0 && def.period.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "period must be positive and finite, got {}",
                def.period
            )));
        }
        if n == 0 {
            return Err(Error::InvalidModel(
                "state dimension must be at least 1".into(),
            ));
        }
        if m == 0 {
            return Err(Error::InvalidModel(
                "input dimension must be at least 1".into(),
            ));
        }
        Error::check_dim("f (one expression per state)", n, def.f.len())?;
        let input_cone = def
            .input_cone
            .unwrap_or_else(|| OrthantCone::nonnegative(m));
        Error::check_dim("input cone", m, input_cone.dim())?;
        def.settings.validate()?;

        let f_slot = |name: &str| -> Option<usize> {
            if name == "t" {
                return Some(0);
            }
            if name == "u" && m == 1 {
                return Some(n + 1);
            }
            index_suffix(name, 'x', n).or_else(|| index_suffix(name, 'u', m).map(|k| n + k))
        };
        let h_slot = |name: &str| index_suffix(name, 'x', n).map(|i| i - 1);
        let f = def
            .f
            .iter()
            .enumerate()
            .map(|(i, e)| {
                e.bind(&f_slot).map_err(|source| Error::Unbound {
                    field: format!("f[{i}]"),
                    source,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let h = def
            .h
            .iter()
            .enumerate()
            .map(|(k, e)| {
                e.bind(&h_slot).map_err(|source| Error::Unbound {
                    field: format!("h[{k}]"),
                    source,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let mdl = ClosedLoopModel {
            n,
            m,
            period: def.period,
            f_src: def.f,
            h_src: def.h,
            f,
            h,
            state_box: def.state_box,
            input_cone,
            settings: def.settings,
        };
        mdl.check_periodicity()?;
        Ok(mdl)
    }

    fn check_periodicity(&self) -> Result<()> {
        let mut q = QuasiRandom::new(1 + self.n, 0x7e71_0d1c);
        let mut a = vec![0.0; self.n];
        let mut b = vec![0.0; self.n];
        for _ in 0..PERIODICITY_SAMPLES {
            let p = q.next_point();
            let t = p[0] * self.period;
            let x = self.state_box.point_at(&p[1..]);
            self.eval_into(t, &x, &mut a)?;
            self.eval_into(t + self.period, &x, &mut b)?;
            let defect = sup_dist(&a, &b);
            if !(defect < PERIODICITY_TOL * sup_norm(&a).max(1.0)) {
                return Err(Error::InvalidModel(format!(
                    "field is not {}-periodic in t: |F(t,x) - F(t+tau,x)| = {defect:e} at t = {t}, x = {x:?}",
                    self.period
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn input_dim(&self) -> usize {
        self.m
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn cone(&self) -> &OrthantCone {
        self.state_box.cone()
    }

    pub fn input_cone(&self) -> &OrthantCone {
        &self.input_cone
    }

    pub fn state_box(&self) -> &OrderInterval {
        &self.state_box
    }

    pub fn f_exprs(&self) -> &[Expr] {
        &self.f_src
    }

    pub fn h_exprs(&self) -> &[Expr] {
        &self.h_src
    }

    /// Solver settings with the step cap resolved against the period.
    pub fn settings(&self) -> IntegratorSettings {
        self.settings.for_period(self.period)
    }

    pub fn with_settings(mut self, settings: IntegratorSettings) -> Self {
        self.settings = settings;
        self
    }

    /// Open-loop field `f(t, x, u)`.
    pub fn eval_open_loop(
        &self,
        t: f64,
        x: &[f64],
        u: &[f64],
        out: &mut [f64],
    ) -> Result<(), EvalError> {
        let mut slots = Vec::with_capacity(1 + self.n + self.m);
        slots.push(t);
        slots.extend_from_slice(x);
        slots.extend_from_slice(u);
        for (o, e) in out.iter_mut().zip(&self.f) {
            *o = e.eval(&slots)?;
        }
        Ok(())
    }

    /// Output map `h(x)`.
    pub fn eval_output(&self, x: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        for (o, e) in out.iter_mut().zip(&self.h) {
            *o = e.eval(x)?;
        }
        Ok(())
    }

    fn eval_into(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        VectorField::eval(self, t, x, out).map_err(|source| Error::Eval { t, source })
    }

    /// `F(t, x) = f(t, x, h(x))`.
    pub fn eval_closed_loop_field(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        Error::check_dim("state", self.n, x.len())?;
        let mut out = vec![0.0; self.n];
        self.eval_into(t, x, &mut out)?;
        Ok(out)
    }
}

impl VectorField for ClosedLoopModel {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval(&self, t: f64, x: &[f64], dx: &mut [f64]) -> Result<(), EvalError> {
        let mut u = vec![0.0; self.m];
        self.eval_output(x, &mut u)?;
        self.eval_open_loop(t, x, &u, dx)
    }
}

/// The symmetric system `ẋ = f(t, x, h(y)), ẏ = f(t, y, h(x))` on `X × X`.
#[derive(Debug, Clone)]
pub struct DoubledModel {
    base: ClosedLoopModel,
    cone: OrthantCone,
    interval: OrderInterval,
}

impl DoubledModel {
    pub fn base(&self) -> &ClosedLoopModel {
        &self.base
    }

    /// `C = K × (−K)`.
    pub fn cone(&self) -> &OrthantCone {
        &self.cone
    }

    /// `I = [(lo, hi), (hi, lo)]_C`.
    pub fn interval(&self) -> &OrderInterval {
        &self.interval
    }

    pub fn period(&self) -> f64 {
        self.base.period
    }

    pub fn eval_doubled_field(&self, t: f64, z: &[f64]) -> Result<Vec<f64>> {
        Error::check_dim("doubled state", 2 * self.base.n, z.len())?;
        let mut out = vec![0.0; 2 * self.base.n];
        VectorField::eval(self, t, z, &mut out).map_err(|source| Error::Eval { t, source })?;
        Ok(out)
    }
}

impl VectorField for DoubledModel {
    fn dim(&self) -> usize {
        2 * self.base.n
    }

    fn eval(&self, t: f64, z: &[f64], dz: &mut [f64]) -> Result<(), EvalError> {
        let n = self.base.n;
        let (x, y) = z.split_at(n);
        let (dx, dy) = dz.split_at_mut(n);
        let mut hx = vec![0.0; self.base.m];
        let mut hy = vec![0.0; self.base.m];
        self.base.eval_output(x, &mut hx)?;
        self.base.eval_output(y, &mut hy)?;
        self.base.eval_open_loop(t, x, &hy, dx)?;
        self.base.eval_open_loop(t, y, &hx, dy)
    }
}

pub fn build_doubled(mdl: &ClosedLoopModel) -> DoubledModel {
    DoubledModel {
        cone: product_cone(mdl.cone()),
        interval: mdl.state_box.doubled(),
        base: mdl.clone(),
    }
}

/// Swaps the two `n`-blocks of a doubled state.
pub fn swap_blocks(z: &[f64]) -> Vec<f64> {
    let n = z.len() / 2;
    let mut out = z[n..].to_vec();
    out.extend_from_slice(&z[..n]);
    out
}

/// Finite-difference Jacobian `∂g_i/∂x_j` of a vector function, returned row-major.
pub fn fd_jacobian<E>(
    rows: usize,
    x: &[f64],
    mut g: impl FnMut(&[f64], &mut [f64]) -> Result<(), E>,
) -> Result<Vec<Vec<f64>>, E> {
    let mut jac = vec![vec![0.0; x.len()]; rows];
    let mut xp = x.to_vec();
    let mut plus = vec![0.0; rows];
    let mut minus = vec![0.0; rows];
    for j in 0..x.len() {
        let scale = libm::fabs(x[j]).max(1.0);
        let h = (x[j] + libm::cbrt(f64::EPSILON) * scale) - x[j];
        xp[j] = x[j] + h;
        g(&xp, &mut plus)?;
        xp[j] = x[j] - h;
        g(&xp, &mut minus)?;
        xp[j] = x[j];
        for i in 0..rows {
            jac[i][j] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Interaction signs of a cyclic system: `deltas[i]` is the sign of `∂F_i/∂x_{i−1 mod n}`
/// (`0` when it vanishes or changes sign over the samples).
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeedbackSignature {
    pub deltas: Vec<i8>,
    /// Product of the deltas; `None` unless every delta is `±1`.
    pub delta: Option<i8>,
}

impl FeedbackSignature {
    pub fn is_negative_feedback(&self) -> bool {
        self.delta == Some(-1)
    }
}

/// Classifies the closed-loop field as a cyclic feedback system from `samples` quasi-random
/// points of `[0, τ] × X`.
pub fn classify_cyclic(mdl: &ClosedLoopModel, samples: usize) -> Result<FeedbackSignature> {
    let n = mdl.n;
    let mut q = QuasiRandom::new(1 + n, 0);
    // per coupling: 0 = not yet seen, otherwise the first sign observed; 2 = indeterminate
    let mut seen = vec![0i8; n];
    for _ in 0..samples.max(1) {
        let p = q.next_point();
        let t = p[0] * mdl.period;
        let x = mdl.state_box.point_at(&p[1..]);
        let jac = fd_jacobian(n, &x, |xx, out| {
            VectorField::eval(mdl, t, xx, out).map_err(|source| Error::Eval { t, source })
        })?;
        for (i, row) in jac.iter().enumerate() {
            let pred = (i + n - 1) % n;
            for (j, &v) in row.iter().enumerate() {
                if j != i && j != pred && libm::fabs(v) > COUPLING_THRESHOLD {
                    return Err(Error::NonCyclic {
                        row: i + 1,
                        col: j + 1,
                        value: v,
                        t,
                    });
                }
            }
            let v = row[pred];
            let s = if libm::fabs(v) <= COUPLING_THRESHOLD {
                2
            } else if v > 0.0 {
                1
            } else {
                -1
            };
            seen[i] = match (seen[i], s) {
                (0, s) => s,
                (a, b) if a == b => a,
                _ => 2,
            };
        }
    }
    let deltas: Vec<i8> = seen.iter().map(|&s| if s == 2 { 0 } else { s }).collect();
    let delta = deltas
        .iter()
        .try_fold(1i8, |acc, &d| (d != 0).then_some(acc * d));
    Ok(FeedbackSignature { deltas, delta })
}

/// Display name of a component formula, e.g. `f[2]`.
pub fn field_name(kind: &str, i: usize) -> String {
    format!("{kind}[{i}]")
}
