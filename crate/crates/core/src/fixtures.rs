//! Fixture corpus shipped with the crate.

use crate::nest::{parse_nest, LoopNest};

pub const VECTOR_ADD: &str = include_str!("../fixtures/vector_add.json");
pub const ELEMENTWISE_ADD_2D: &str = include_str!("../fixtures/elementwise_add_2d.json");
pub const CHAIN: &str = include_str!("../fixtures/chain.json");
pub const JACOBI: &str = include_str!("../fixtures/jacobi.json");
pub const MATVEC: &str = include_str!("../fixtures/matvec.json");
pub const MATMUL: &str = include_str!("../fixtures/matmul.json");

/// `(name, json)` for every fixture.
pub const ALL: &[(&str, &str)] = &[
    ("vector_add", VECTOR_ADD),
    ("elementwise_add_2d", ELEMENTWISE_ADD_2D),
    ("chain", CHAIN),
    ("jacobi", JACOBI),
    ("matvec", MATVEC),
    ("matmul", MATMUL),
];

pub fn by_name(name: &str) -> Option<LoopNest> {
    ALL.iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| parse_nest(t).expect("fixture parses"))
}

/// `c[i] = a[i] + b[i]`, `0 ≤ i ≤ N`.
pub fn vector_add() -> LoopNest {
    parse_nest(VECTOR_ADD).expect("fixture parses")
}

/// `c[i][j] = a[i][j] + b[i][j]`.
pub fn elementwise_add_2d() -> LoopNest {
    parse_nest(ELEMENTWISE_ADD_2D).expect("fixture parses")
}

/// `a[i] = a[i-1] + 1`.
pub fn chain() -> LoopNest {
    parse_nest(CHAIN).expect("fixture parses")
}

/// Two-statement time-stepped Jacobi sweep over 1-D arrays `A` and `B`.
pub fn jacobi() -> LoopNest {
    parse_nest(JACOBI).expect("fixture parses")
}

/// `y[i] += A[i][j] * x[j]`.
pub fn matvec() -> LoopNest {
    parse_nest(MATVEC).expect("fixture parses")
}

/// `C[i][j] += A[i][k] * B[k][j]`.
pub fn matmul() -> LoopNest {
    parse_nest(MATMUL).expect("fixture parses")
}
