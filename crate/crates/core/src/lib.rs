//! Affine scheduling and data allocation for perfectly and imperfectly
//! nested affine loops.
//!
//! A [`nest::LoopNest`] describes statements, arrays, accesses and
//! dependences. [`procedure::run_procedure`] computes time/space
//! transformations; [`comm`] derives communication requirements from a plan and
//! [`validator`] checks a plan by direct enumeration.

pub mod algebra;
pub mod comm;
pub mod constraints;
pub mod fixtures;
pub mod nest;
pub mod procedure;
pub mod solver;
pub mod validator;

pub use algebra::{IntMatrix, IntVector, Rational};
pub use nest::{load_nest, parse_nest, LoopNest};
pub use procedure::{run_procedure, ProcedureConfig, TransformPlan};
