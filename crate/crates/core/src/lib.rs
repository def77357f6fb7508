//! A saturation-based heuristic prover for simply-typed higher-order logic.
//!
//! Facts live in an assumption-box lattice, proof steps are driven by
//! box-annotated E-matching over a congruence-closed rewrite table, and
//! every derived fact carries a justification that an independent checker
//! replays.

pub mod arith;
pub mod boxes;
pub mod cli;
pub mod kernel;
pub mod par;
pub mod problem;
pub mod rewrite;
pub mod script;
pub mod search;
pub mod steps;
pub mod syntax;
pub mod term;
pub mod theory;
