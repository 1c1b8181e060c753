//! Time-periodic closed-loop negative-feedback systems and their doubled monotone embedding.
//!
//! A closed-loop system `ẋ = f(t, x, h(x))` with `τ`-periodic `f` is embedded into the symmetric
//! system `ẋ = f(t, x, h(y)), ẏ = f(t, y, h(x))`, which is monotone for the product cone
//! `C = K × (−K)` whenever `f` is quasimonotone in `x`, increasing in the input `u` and `h` is
//! decreasing. Iterating the doubled Poincaré map from the two ordered corners of a box brackets
//! every orbit of the original Poincaré map between two monotone chains; when the chains meet, the
//! original system has a unique harmonic periodic solution that attracts the whole box.
//!
//! # Layout
//! - [`order`]: orthant cones, order relations and order intervals.
//! - [`model`]: the expression language, closed-loop and doubled vector fields, cyclic
//!   feedback classification.
//! - [`integrate`]: adaptive Dormand–Prince 5(4) flow.
//! - [`poincare`]: Poincaré maps, orbits and periodic solutions.
//! - [`certify`]: hypothesis checks and the bracketing iteration.
//! - [`genereg`]: the cyclic gene-regulatory model generator and its uniqueness condition.
//!
//! The crate is `no_std` and only needs `alloc`. File formats and the command-line front end
//! live in the `perifix` crate.
//!
//! ```
//! use perifix_core::genereg::{GeneSpec, build_gene_model, check_h};
//! use perifix_core::model::parse_expr;
//!
//! let spec = GeneSpec::new(
//!     vec![
//!         parse_expr("2").unwrap(),
//!         parse_expr("1").unwrap(),
//!         parse_expr("2 - (4/5)*sin(2*pi*t/5)").unwrap(),
//!     ],
//!     parse_expr("2/(1+u)").unwrap(),
//!     5.0,
//! )
//! .unwrap();
//! let model = build_gene_model(&spec).unwrap();
//! assert_eq!(model.dim(), 3);
//! assert!(check_h(&spec, 1000).unwrap().passed());
//! ```
#![no_std]
// `!(a < b)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod certify;
mod error;
pub mod genereg;
pub mod integrate;
pub mod model;
pub mod order;
pub mod poincare;
mod sampling;

pub use error::{Error, Result};
pub use sampling::QuasiRandom;

/// Sup norm of `a - b`.
pub fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0, |m, (x, y)| f64::max(m, libm::fabs(x - y)))
}

/// Sup norm.
pub fn sup_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| f64::max(m, libm::fabs(*x)))
}
