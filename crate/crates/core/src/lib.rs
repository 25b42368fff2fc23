//! Numerical simulation of quantum-walk algorithms on trees and layered DAGs
//! whose structure is only available through local queries.
//!
//! The crate builds the edge-space walk operators explicitly, simulates phase
//! estimation at the level of its outcome distribution, and layers the size
//! estimator, the backtracking search, and the AND-OR evaluator on top. The
//! [`spectral`] and [`oracles`] modules provide the exact linear-algebra
//! checks used to validate every estimator.

// Negated float comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod andor;
pub mod backtrack;
pub mod error;
pub mod graph;
pub mod measure;
pub mod oracles;
pub mod qpe;
pub mod rng;
pub mod size;
pub mod spectral;
pub mod stats;
pub mod walk;

pub use error::{Error, Result};
pub use graph::{Annotations, ExplorableHandle, Explorer, Gate, Instance, LayeredDag, Mark, QueryLedger, VertexId};
