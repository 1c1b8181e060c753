//! Period maps `T(x) = ψ(τ, 0, x)` and `T̃(z) = φ(τ, 0, z)`, orbits and periodic solutions.

use alloc::vec::Vec;

use crate::integrate::{
    IntegratorSettings, Stats, Stepper, Trajectory, VectorField, sample_trajectory, uniform_grid,
};
use crate::model::{ClosedLoopModel, DoubledModel};
use crate::{Error, Result, sup_dist, sup_norm};

/// `T^k x` for `k = 0..=n` together with the step residuals `‖T^{k+1}x − T^k x‖∞`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Orbit {
    pub points: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub stats: Stats,
}

impl Orbit {
    pub fn last(&self) -> &[f64] {
        self.points
            .last()
            .expect("orbit always holds its start point")
    }

    /// Diameter of the last `max(5, n/10)` iterates; the observable stand-in for `ω_T(x)`.
    pub fn tail_diameter(&self) -> f64 {
        let n = self.points.len() - 1;
        let k = core::cmp::max(5, n / 10).min(self.points.len());
        let tail = &self.points[self.points.len() - k..];
        let mut d: f64 = 0.0;
        for (i, a) in tail.iter().enumerate() {
            for b in &tail[i + 1..] {
                d = d.max(sup_dist(a, b));
            }
        }
        d
    }
}

/// One period of `field` starting at `t = 0`.
pub fn period_map<V: VectorField>(
    field: V,
    tau: f64,
    x: &[f64],
    s: &IntegratorSettings,
) -> Result<Vec<f64>> {
    let mut st = Stepper::new(field, 0.0, x, &s.for_period(tau))?;
    st.advance_to(tau)?;
    Ok(st.state().to_vec())
}

/// `n` iterates of the period map of `field` from one continuous integration over `[0, nτ]`.
pub fn iterate_periods<V: VectorField>(
    field: V,
    tau: f64,
    x: &[f64],
    n: usize,
    s: &IntegratorSettings,
) -> Result<Orbit> {
    let mut st = Stepper::new(field, 0.0, x, &s.for_period(tau))?;
    let mut points = Vec::with_capacity(n + 1);
    let mut residuals = Vec::with_capacity(n);
    points.push(x.to_vec());
    for k in 1..=n {
        st.advance_to(k as f64 * tau)?;
        let p = st.state().to_vec();
        residuals.push(sup_dist(&p, &points[k - 1]));
        points.push(p);
    }
    Ok(Orbit {
        points,
        residuals,
        stats: st.stats(),
    })
}

pub fn poincare_map(mdl: &ClosedLoopModel, x: &[f64], s: &IntegratorSettings) -> Result<Vec<f64>> {
    if !mdl.state_box().contains(x, 0.0).unwrap_or(false) {
        log::warn!("poincare_map: {x:?} lies outside the state box");
    }
    period_map(mdl, mdl.period(), x, s)
}

pub fn doubled_map(dm: &DoubledModel, z: &[f64], s: &IntegratorSettings) -> Result<Vec<f64>> {
    Error::check_dim("doubled state", 2 * dm.base().dim(), z.len())?;
    period_map(dm, dm.period(), z, s)
}

pub fn iterate_orbit(
    mdl: &ClosedLoopModel,
    x: &[f64],
    n: usize,
    s: &IntegratorSettings,
) -> Result<Orbit> {
    iterate_periods(mdl, mdl.period(), x, n, s)
}

/// Samples the periodic solution through the fixed point `r` on `samples_per_period + 1` points
/// of `[0, τ]`.
///
/// Fails with a precondition error when `‖T r − r‖∞ > residual_bound`, and with
/// [`Error::Closure`] when the sampled loop does not close to within ten times the residual
/// (floored at the solver's own tolerance).
pub fn periodic_solution(
    mdl: &ClosedLoopModel,
    r: &[f64],
    samples_per_period: usize,
    residual_bound: f64,
    s: &IntegratorSettings,
) -> Result<Trajectory> {
    let s = s.for_period(mdl.period());
    let residual = sup_dist(&poincare_map(mdl, r, &s)?, r);
    if !(residual <= residual_bound) {
        return Err(Error::Precondition(alloc::format!(
            "|T r - r| = {residual:e} exceeds the residual bound {residual_bound:e}"
        )));
    }
    let grid = uniform_grid(0.0, mdl.period(), samples_per_period.max(1));
    let tr = sample_trajectory(mdl, 0.0, r, &grid, &s)?;
    let defect = sup_dist(tr.states.last().unwrap(), r);
    let bound = 10.0 * residual.max(s.atol + s.rtol * sup_norm(r));
    if !(defect <= bound) {
        return Err(Error::Closure { defect, bound });
    }
    Ok(tr)
}
