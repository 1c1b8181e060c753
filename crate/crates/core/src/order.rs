//! Orthant cones and the partial orders they induce.
//!
//! An orthant cone is `{x : s_i x_i ≥ 0}` for a sign pattern `s ∈ {+1, −1}^n`. Every cone used by
//! the closed-loop machinery is of this form: the state cone `K`, the input cone on `ℝ^m` and the
//! product cone `C = K × (−K)` of the doubled system. Orthant cones are self-dual, so all dual-cone
//! conditions reduce to componentwise sign tests.

use alloc::vec::Vec;
use core::fmt;

use crate::{Error, Result};

/// Default absolute slack for comparisons of numerically integrated vectors.
pub const DEFAULT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn from_int(v: i64) -> Option<Sign> {
        match v {
            1 => Some(Sign::Plus),
            -1 => Some(Sign::Minus),
            _ => None,
        }
    }
}

/// Sign-pattern cone on `ℝ^n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OrthantCone {
    signs: Vec<Sign>,
}

impl OrthantCone {
    pub fn new(signs: Vec<Sign>) -> Self {
        OrthantCone { signs }
    }

    /// The standard cone `ℝ^n_+`.
    pub fn nonnegative(n: usize) -> Self {
        OrthantCone {
            signs: alloc::vec![Sign::Plus; n],
        }
    }

    /// Builds a cone from `±1` integers, rejecting anything else.
    pub fn from_ints(signs: &[i64]) -> Result<Self> {
        signs
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                Sign::from_int(s).ok_or_else(|| {
                    Error::InvalidModel(alloc::format!("cone[{i}] = {s} is not +1 or -1"))
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(OrthantCone::new)
    }

    pub fn dim(&self) -> usize {
        self.signs.len()
    }

    pub fn signs(&self) -> &[Sign] {
        &self.signs
    }

    pub fn sign(&self, i: usize) -> f64 {
        self.signs[i].as_f64()
    }

    /// `x ⩽ y` up to an absolute slack `eps`.
    pub fn leq(&self, x: &[f64], y: &[f64], eps: f64) -> Result<bool> {
        Ok(self.margin(x, y)? >= -eps)
    }

    /// `min_i s_i (y_i − x_i)`; nonnegative iff `x ⩽ y`. `+∞` for the zero-dimensional cone.
    pub fn margin(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        Error::check_dim("order comparison (left)", self.dim(), x.len())?;
        Error::check_dim("order comparison (right)", self.dim(), y.len())?;
        Ok(self
            .signs
            .iter()
            .zip(x.iter().zip(y))
            .map(|(s, (a, b))| s.as_f64() * (b - a))
            .fold(f64::INFINITY, f64::min))
    }

    /// Greatest lower bound of `x` and `y` in this order.
    pub fn meet(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        self.signs
            .iter()
            .zip(x.iter().zip(y))
            .map(|(s, (&a, &b))| match s {
                Sign::Plus => a.min(b),
                Sign::Minus => a.max(b),
            })
            .collect()
    }

    /// Least upper bound of `x` and `y` in this order.
    pub fn join(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        self.signs
            .iter()
            .zip(x.iter().zip(y))
            .map(|(s, (&a, &b))| match s {
                Sign::Plus => a.max(b),
                Sign::Minus => a.min(b),
            })
            .collect()
    }
}

impl fmt::Display for OrthantCone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, s) in self.signs.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(match s {
                Sign::Plus => "+",
                Sign::Minus => "-",
            })?;
        }
        f.write_str(")")
    }
}

/// `x ⩽_cone y` with absolute slack `eps`.
pub fn cmp_leq(cone: &OrthantCone, x: &[f64], y: &[f64], eps: f64) -> Result<bool> {
    cone.leq(x, y, eps)
}

/// `C = K × (−K)`: `(x, y) ⩽_C (x̄, ȳ)` iff `x ⩽_K x̄` and `ȳ ⩽_K y`.
pub fn product_cone(k: &OrthantCone) -> OrthantCone {
    let mut signs = k.signs.clone();
    signs.extend(k.signs.iter().map(|s| s.flip()));
    OrthantCone::new(signs)
}

/// Closed order interval `[lo, hi]` of an orthant cone; a box.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OrderInterval {
    cone: OrthantCone,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl OrderInterval {
    /// Fails unless dimensions agree, all bounds are finite and `lo ⩽ hi` exactly.
    pub fn new(cone: OrthantCone, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        Error::check_dim("interval lower bound", cone.dim(), lo.len())?;
        Error::check_dim("interval upper bound", cone.dim(), hi.len())?;
        if lo.iter().chain(&hi).any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("interval bounds must be finite".into()));
        }
        if !cone.leq(&lo, &hi, 0.0)? {
            return Err(Error::InvalidModel(alloc::format!(
                "interval bounds are not ordered: lo = {lo:?}, hi = {hi:?}, cone = {cone}"
            )));
        }
        Ok(OrderInterval { cone, lo, hi })
    }

    pub fn cone(&self) -> &OrthantCone {
        &self.cone
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn dim(&self) -> usize {
        self.cone.dim()
    }

    pub fn contains(&self, x: &[f64], eps: f64) -> Result<bool> {
        Ok(self.cone.leq(&self.lo, x, eps)? && self.cone.leq(x, &self.hi, eps)?)
    }

    /// Maps `s ∈ [0,1]^n` affinely onto the box.
    pub fn point_at(&self, unit: &[f64]) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .zip(unit)
            .map(|((a, b), s)| a + s * (b - a))
            .collect()
    }

    /// The interval `I = [(lo, hi), (hi, lo)]_C` of the doubled system.
    pub fn doubled(&self) -> OrderInterval {
        let mut lo = self.lo.clone();
        lo.extend_from_slice(&self.hi);
        let mut hi = self.hi.clone();
        hi.extend_from_slice(&self.lo);
        OrderInterval {
            cone: product_cone(&self.cone),
            lo,
            hi,
        }
    }
}

pub fn in_interval(ival: &OrderInterval, x: &[f64], eps: f64) -> Result<bool> {
    ival.contains(x, eps)
}
