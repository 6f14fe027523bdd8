//! Compositional thermostatics.
//!
//! A thermostatic system is a convex space of states together with a concave
//! entropy function into the extended reals. Systems compose along convex
//! relations: the composite's entropy at a coarse state is the supremum of
//! the summed component entropies over all compatible fine states, which is
//! the entropy-maximization principle packaged as an operad algebra.
//!
//! The crate provides
//!
//! * [`xreal`]: extended-real arithmetic where `-∞` dominates `+∞`,
//! * [`convex`]: polyhedral state spaces, membership, and sampling,
//! * [`system`]: the entropy families (tanks, ideal gases, heat baths,
//!   Shannon, von Neumann, measurement entropies, sums, pushforwards),
//! * [`relation`]: convex relations with lazy composition,
//! * [`optimize`]: constrained concave maximization with exact `±∞`
//!   semantics, plus a brute-force grid oracle,
//! * [`operad`]: n-ary operations and their action on systems,
//! * [`catalog`]: executable reconstructions of the worked ensembles
//!   (two tanks, gas equalization, heat-bath coupling, canonical, grand
//!   canonical, microcanonical) with closed-form references,
//! * [`document`]: the batch JSON document format and the eval/sweep
//!   runners behind the CLI,
//! * [`laws`]: randomized law suites (convex axioms, functoriality,
//!   laxator naturality, equivariance, oracle agreement).
//!
//! The `guide` module mirrors the chapters of the book under `book/`; its
//! code fences compile and run as doc-tests so the narrative cannot drift
//! from the library.

pub mod catalog;
pub mod convex;
pub mod document;
pub mod laws;
mod linalg;
mod lp;
pub mod operad;
pub mod optimize;
pub mod relation;
pub mod system;
pub mod xreal;

pub use convex::{BoundingBox, ConstraintSet, ConvexSpace, State};
pub use optimize::{MaxResult, SolverConfig, Status};
pub use relation::ConvexRelation;
pub use system::{EntropyFn, StochasticMap, ThermostaticSystem};
pub use xreal::ExtReal;

use xreal::ExtReal as Xr;

/// Errors across the engine.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("sampling failed for {space}: {reason}")]
    Sampling { space: String, reason: String },

    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("solver stopped after {iterations} iterations without meeting tolerance (best value {best})")]
    Convergence { iterations: usize, best: Xr },

    #[error("invalid document: {0}")]
    Document(String),
}

/// The book chapters from `book/src`, re-exposed as rustdoc pages.
///
/// `cargo test --doc` compiles and runs every code fence in them, so the
/// narrative cannot drift from the library.
pub mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/extended-reals.md")]
    pub mod extended_reals {}
    #[doc = include_str!("../../../book/src/state-spaces.md")]
    pub mod state_spaces {}
    #[doc = include_str!("../../../book/src/systems.md")]
    pub mod systems {}
    #[doc = include_str!("../../../book/src/maximization.md")]
    pub mod maximization {}
    #[doc = include_str!("../../../book/src/composition.md")]
    pub mod composition {}
    #[doc = include_str!("../../../book/src/ensembles.md")]
    pub mod ensembles {}
    #[doc = include_str!("../../../book/src/batch-runs.md")]
    pub mod batch_runs {}
}
