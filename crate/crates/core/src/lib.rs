//! Conserved quantities from non-Noether symmetries.
//!
//! The crate is layered bottom-up: [`expr`] (symbolic scalars), [`exterior`]
//! (forms and multivectors on one chart), [`mechanics`] (systems,
//! symmetries, invariants), [`flow`] (numerical verification) and
//! [`cli`] (config files and reports).

pub mod cli;
pub mod expr;
pub mod exterior;
pub mod flow;
pub mod linalg;
pub mod mechanics;
pub mod scalar;

pub use expr::{parse_expression, Expr};
pub use exterior::{Chart, DifferentialForm, MultiVectorField};
pub use mechanics::{PhaseSpaceSystem, Structure, SymmetryGenerator};
