#![allow(dead_code)]

use perifix_core::genereg::{GeneSpec, build_gene_model};
use perifix_core::model::{ClosedLoopModel, Expr, parse_expr};

pub fn expr(s: &str) -> Expr {
    parse_expr(s).unwrap()
}

pub fn example_spec() -> GeneSpec {
    GeneSpec::new(
        vec![expr("2"), expr("1"), expr("2 - 0.8*sin(2*pi*t/5)")],
        expr("2/(1+u)"),
        5.0,
    )
    .unwrap()
}

pub fn example_model() -> ClosedLoopModel {
    build_gene_model(&example_spec()).unwrap()
}
