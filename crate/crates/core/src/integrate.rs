//! Adaptive Dormand–Prince 5(4) integration of `ẋ = F(t, x)`.
//!
//! [`Stepper`] keeps its step-size controller state across calls to [`Stepper::advance_to`], so
//! sampling a trajectory on a grid or at period multiples is one continuous integration rather
//! than a sequence of restarts.

use alloc::vec;
use alloc::vec::Vec;

use crate::model::EvalError;
use crate::{Error, Result};

/// Right-hand side of an ODE.
pub trait VectorField {
    fn dim(&self) -> usize;
    fn eval(&self, t: f64, x: &[f64], dx: &mut [f64]) -> Result<(), EvalError>;
}

impl<V: VectorField + ?Sized> VectorField for &V {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn eval(&self, t: f64, x: &[f64], dx: &mut [f64]) -> Result<(), EvalError> {
        (**self).eval(t, x, dx)
    }
}

/// Adapts an infallible closure `(t, x, dx)` into a [`VectorField`].
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(f64, &[f64], &mut [f64])> FnField<F> {
    pub fn new(dim: usize, f: F) -> Self {
        FnField { dim, f }
    }
}

impl<F: Fn(f64, &[f64], &mut [f64])> VectorField for FnField<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, t: f64, x: &[f64], dx: &mut [f64]) -> Result<(), EvalError> {
        (self.f)(t, x, dx);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntegratorSettings {
    pub rtol: f64,
    pub atol: f64,
    /// `None` means "τ/100" for periodic models and unbounded otherwise.
    pub max_step: Option<f64>,
    pub max_steps: usize,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        IntegratorSettings {
            rtol: 1e-9,
            atol: 1e-12,
            max_step: None,
            max_steps: 10_000_000,
        }
    }
}

impl IntegratorSettings {
    pub fn validate(&self) -> Result<()> {
        let ok = self.rtol > 0.0
            && self.atol > 0.0
            && self.rtol.is_finite()
            && self.atol.is_finite()
            && self.max_step.is_none_or(|h| h > 0.0)
            && self.max_steps > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::Precondition(alloc::format!(
                "invalid integrator settings {self:?}"
            )))
        }
    }

    /// Fills in the default step cap for a field of period `tau`.
    pub fn for_period(&self, tau: f64) -> IntegratorSettings {
        IntegratorSettings {
            max_step: Some(self.max_step.unwrap_or(tau / 100.0)),
            ..*self
        }
    }

    pub fn with_tolerances(self, rtol: f64, atol: f64) -> IntegratorSettings {
        IntegratorSettings { rtol, atol, ..self }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Stats {
    pub steps: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

/// States of a flow sampled at increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub stats: Stats,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth- minus fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

/// Dormand–Prince 5(4) stepper with FSAL and max-norm error control
/// (`|err_i| ≤ atol + rtol·max(|x_i|, |x̂_i|)`).
pub struct Stepper<V> {
    field: V,
    settings: IntegratorSettings,
    t: f64,
    x: Vec<f64>,
    // derivative at (t, x), reused as the first stage of the next step
    k1: Vec<f64>,
    h: f64,
    stats: Stats,
    ks: [Vec<f64>; 6],
    tmp: Vec<f64>,
    x_new: Vec<f64>,
}

impl<V: VectorField> Stepper<V> {
    pub fn new(field: V, t0: f64, x0: &[f64], settings: &IntegratorSettings) -> Result<Self> {
        settings.validate()?;
        let n = field.dim();
        Error::check_dim("initial state", n, x0.len())?;
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::Precondition("initial state is not finite".into()));
        }
        let mut k1 = vec![0.0; n];
        field
            .eval(t0, x0, &mut k1)
            .map_err(|source| Error::Eval { t: t0, source })?;
        let mut s = Stepper {
            field,
            settings: *settings,
            t: t0,
            x: x0.to_vec(),
            k1,
            h: 0.0,
            stats: Stats {
                rhs_evals: 1,
                ..Stats::default()
            },
            ks: core::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            x_new: vec![0.0; n],
        };
        s.h = s.initial_step()?;
        Ok(s)
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> &[f64] {
        &self.x
    }

    pub fn stats(&self) -> Stats {
        self.stats
    }

    fn scale(&self, a: f64, b: f64) -> f64 {
        self.settings.atol + self.settings.rtol * f64::max(libm::fabs(a), libm::fabs(b))
    }

    fn eval(&mut self, t: f64, which: usize) -> Result<()> {
        self.stats.rhs_evals += 1;
        let out = &mut self.ks[which];
        self.field
            .eval(t, &self.tmp, out)
            .map_err(|source| Error::Eval { t, source })
    }

    fn initial_step(&mut self) -> Result<f64> {
        let n = self.x.len();
        if n == 0 {
            return Ok(self.settings.max_step.unwrap_or(1.0));
        }
        let mut d0: f64 = 0.0;
        let mut d1: f64 = 0.0;
        for i in 0..n {
            let sc = self.scale(self.x[i], self.x[i]);
            d0 = d0.max(libm::fabs(self.x[i]) / sc);
            d1 = d1.max(libm::fabs(self.k1[i]) / sc);
        }
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        for i in 0..n {
            self.tmp[i] = self.x[i] + h0 * self.k1[i];
        }
        self.eval(self.t + h0, 0)?;
        let mut d2: f64 = 0.0;
        for i in 0..n {
            let sc = self.scale(self.x[i], self.x[i]);
            d2 = d2.max(libm::fabs(self.ks[0][i] - self.k1[i]) / sc / h0);
        }
        let dmax = d1.max(d2);
        let h1 = if dmax <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            libm::pow(0.01 / dmax, 0.2)
        };
        let mut h = (100.0 * h0).min(h1);
        if let Some(cap) = self.settings.max_step {
            h = h.min(cap);
        }
        Ok(h)
    }

    /// Attempts one step of size `h`; returns the scaled error norm, or `None` when the
    /// trial state is not finite. The trial state is left in `x_new`, its derivative in `ks[5]`.
    fn trial(&mut self, h: f64) -> Result<Option<f64>> {
        let n = self.x.len();
        let t = self.t;
        let x = &self.x;
        let k1 = &self.k1;

        for i in 0..n {
            self.tmp[i] = x[i] + h * A21 * k1[i];
        }
        self.eval(t + C2 * h, 0)?;
        for i in 0..n {
            self.tmp[i] = self.x[i] + h * (A31 * self.k1[i] + A32 * self.ks[0][i]);
        }
        self.eval(t + C3 * h, 1)?;
        for i in 0..n {
            self.tmp[i] =
                self.x[i] + h * (A41 * self.k1[i] + A42 * self.ks[0][i] + A43 * self.ks[1][i]);
        }
        self.eval(t + C4 * h, 2)?;
        for i in 0..n {
            self.tmp[i] = self.x[i]
                + h * (A51 * self.k1[i]
                    + A52 * self.ks[0][i]
                    + A53 * self.ks[1][i]
                    + A54 * self.ks[2][i]);
        }
        self.eval(t + C5 * h, 3)?;
        for i in 0..n {
            self.tmp[i] = self.x[i]
                + h * (A61 * self.k1[i]
                    + A62 * self.ks[0][i]
                    + A63 * self.ks[1][i]
                    + A64 * self.ks[2][i]
                    + A65 * self.ks[3][i]);
        }
        self.eval(t + h, 4)?;
        for i in 0..n {
            self.x_new[i] = self.x[i]
                + h * (B1 * self.k1[i]
                    + B3 * self.ks[1][i]
                    + B4 * self.ks[2][i]
                    + B5 * self.ks[3][i]
                    + B6 * self.ks[4][i]);
        }
        if self.x_new.iter().any(|v| !v.is_finite()) {
            return Ok(None);
        }
        self.tmp.copy_from_slice(&self.x_new);
        self.eval(t + h, 5)?;

        let mut err: f64 = 0.0;
        for i in 0..n {
            let e = h
                * (E1 * self.k1[i]
                    + E3 * self.ks[1][i]
                    + E4 * self.ks[2][i]
                    + E5 * self.ks[3][i]
                    + E6 * self.ks[4][i]
                    + E7 * self.ks[5][i]);
            err = err.max(libm::fabs(e) / self.scale(self.x[i], self.x_new[i]));
        }
        Ok(if err.is_finite() { Some(err) } else { None })
    }

    /// Integrates forward to exactly `t1`.
    pub fn advance_to(&mut self, t1: f64) -> Result<()> {
        if t1 < self.t {
            return Err(Error::Precondition(alloc::format!(
                "backward integration requested ({} -> {t1})",
                self.t
            )));
        }
        let mut last_rejected = false;
        while self.t < t1 {
            if self.stats.steps + self.stats.rejected >= self.settings.max_steps {
                return Err(Error::StepLimit {
                    max_steps: self.settings.max_steps,
                    t: self.t,
                    state: self.x.clone(),
                });
            }
            let min_h = 16.0 * f64::EPSILON * f64::max(libm::fabs(self.t), 1.0);
            let mut h = self.h;
            if let Some(cap) = self.settings.max_step {
                h = h.min(cap);
            }
            let remaining = t1 - self.t;
            let clipped = h * (1.0 + 1e-9) >= remaining;
            if clipped {
                h = remaining;
            }
            match self.trial(h)? {
                None => {
                    self.stats.rejected += 1;
                    if h <= min_h {
                        return Err(Error::NonFinite {
                            t: self.t,
                            state: self.x.clone(),
                        });
                    }
                    self.h = h * 0.25;
                    last_rejected = true;
                }
                Some(err) if err > 1.0 => {
                    self.stats.rejected += 1;
                    if h <= min_h {
                        return Err(Error::StepUnderflow {
                            t: self.t,
                            state: self.x.clone(),
                        });
                    }
                    let fac = (SAFETY * libm::pow(err, -0.2)).max(MIN_FACTOR);
                    self.h = h * fac;
                    last_rejected = true;
                }
                Some(err) => {
                    self.stats.steps += 1;
                    self.t = if clipped { t1 } else { self.t + h };
                    core::mem::swap(&mut self.x, &mut self.x_new);
                    core::mem::swap(&mut self.k1, &mut self.ks[5]);
                    let mut fac = if err == 0.0 {
                        MAX_FACTOR
                    } else {
                        (SAFETY * libm::pow(err, -0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
                    };
                    if last_rejected {
                        fac = fac.min(1.0);
                    }
                    let proposal = h * fac;
                    // a step shortened to hit a target says nothing about the natural step size
                    self.h = if clipped {
                        proposal.max(self.h)
                    } else {
                        proposal
                    };
                    last_rejected = false;
                }
            }
        }
        Ok(())
    }
}

/// `ψ(t1, t0, x0)` with solver statistics.
pub fn flow<V: VectorField>(
    field: V,
    t0: f64,
    x0: &[f64],
    t1: f64,
    s: &IntegratorSettings,
) -> Result<(Vec<f64>, Stats)> {
    if t1 < t0 {
        return Err(Error::Precondition(alloc::format!("t1 = {t1} < t0 = {t0}")));
    }
    let mut st = Stepper::new(field, t0, x0, s)?;
    st.advance_to(t1)?;
    Ok((st.x, st.stats))
}

/// States at every point of `grid` from one continuous integration.
pub fn sample_trajectory<V: VectorField>(
    field: V,
    t0: f64,
    x0: &[f64],
    grid: &[f64],
    s: &IntegratorSettings,
) -> Result<Trajectory> {
    if let Some(&first) = grid.first()
        && first < t0
    {
        return Err(Error::Precondition(alloc::format!(
            "grid starts at {first} before t0 = {t0}"
        )));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition(
            "grid is not strictly increasing".into(),
        ));
    }
    let mut st = Stepper::new(field, t0, x0, s)?;
    let mut states = Vec::with_capacity(grid.len());
    for &t in grid {
        st.advance_to(t)?;
        states.push(st.x.clone());
    }
    Ok(Trajectory {
        times: grid.to_vec(),
        states,
        stats: st.stats,
    })
}

/// `n + 1` evenly spaced points from `a` to `b`, endpoints exact.
pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 0 {
        return vec![a];
    }
    let mut g: Vec<f64> = (0..=n)
        .map(|k| a + (b - a) * (k as f64) / (n as f64))
        .collect();
    g[n] = b;
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    fn relax() -> FnField<impl Fn(f64, &[f64], &mut [f64])> {
        FnField::new(1, |_t, x: &[f64], dx: &mut [f64]| dx[0] = 2.0 - 2.0 * x[0])
    }

    #[test]
    fn linear_relaxation_matches_closed_form() {
        let (x, stats) = flow(relax(), 0.0, &[0.0], 5.0, &IntegratorSettings::default()).unwrap();
        let exact = 1.0 - libm::exp(-10.0);
        assert!((x[0] - exact).abs() < 1e-8, "{} vs {exact}", x[0]);
        assert!(stats.steps > 0);
        assert_eq!(stats.rhs_evals, 1 + 1 + 6 * (stats.steps + stats.rejected));
    }

    #[test]
    fn zero_field_is_identity() {
        let zero = FnField::new(2, |_t, _x: &[f64], dx: &mut [f64]| dx.fill(0.0));
        let x0 = [0.3, -1.7];
        let (x, _) = flow(&zero, 0.0, &x0, 12.5, &IntegratorSettings::default()).unwrap();
        assert_eq!(x, x0);
        let grid = uniform_grid(0.0, 1.0, 10);
        let tr = sample_trajectory(&zero, 0.0, &x0, &grid, &IntegratorSettings::default()).unwrap();
        assert_eq!(tr.len(), 11);
        assert!(tr.states.iter().all(|s| s == &x0));
    }

    #[test]
    fn periodic_decay_rate() {
        let f = FnField::new(1, |t, x: &[f64], dx: &mut [f64]| {
            let a = 2.0 - 0.8 * libm::sin(0.4 * core::f64::consts::PI * t);
            dx[0] = -a * x[0];
        });
        let s = IntegratorSettings::default().for_period(5.0);
        let (x, _) = flow(&f, 0.0, &[1.0], 5.0, &s).unwrap();
        assert!((x[0] - libm::exp(-10.0)).abs() < 1e-9);
    }

    #[test]
    fn single_point_grid() {
        let tr = sample_trajectory(
            relax(),
            0.0,
            &[0.25],
            &[0.0],
            &IntegratorSettings::default(),
        )
        .unwrap();
        assert_eq!(tr.states, vec![vec![0.25]]);
    }

    #[test]
    fn grid_before_start_is_rejected() {
        assert!(
            sample_trajectory(relax(), 1.0, &[0.0], &[0.5], &IntegratorSettings::default())
                .is_err()
        );
    }

    #[test]
    fn blow_up_is_reported_with_last_state() {
        let f = FnField::new(1, |_t, x: &[f64], dx: &mut [f64]| dx[0] = x[0] * x[0]);
        let err = flow(&f, 0.0, &[1.0], 2.0, &IntegratorSettings::default()).unwrap_err();
        match err {
            Error::NonFinite { t, state } | Error::StepUnderflow { t, state } => {
                assert!(t < 1.0 && t > 0.9, "{t}");
                assert!(state[0].is_finite());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn step_limit() {
        let s = IntegratorSettings {
            max_steps: 10,
            max_step: Some(0.01),
            ..IntegratorSettings::default()
        };
        assert!(matches!(
            flow(relax(), 0.0, &[0.0], 1.0, &s),
            Err(Error::StepLimit { .. })
        ));
    }

    #[test]
    fn max_step_is_respected() {
        let s = IntegratorSettings::default().for_period(5.0);
        let (_, stats) = flow(relax(), 0.0, &[0.0], 5.0, &s).unwrap();
        assert!(stats.steps >= 100);
    }

    #[test]
    fn evaluation_error_carries_time() {
        struct Bad;
        impl VectorField for Bad {
            fn dim(&self) -> usize {
                1
            }
            fn eval(&self, t: f64, _x: &[f64], dx: &mut [f64]) -> Result<(), EvalError> {
                if t > 0.5 {
                    return Err(EvalError::DivisionByZero);
                }
                dx[0] = 1.0;
                Ok(())
            }
        }
        let err = flow(Bad, 0.0, &[0.0], 1.0, &IntegratorSettings::default()).unwrap_err();
        assert!(matches!(err, Error::Eval { t, .. } if t > 0.5));
    }

    #[test]
    fn grid_endpoints_exact() {
        let g = uniform_grid(0.0, 50.0, 1000);
        assert_eq!(g.len(), 1001);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[1000], 50.0);
    }
}
