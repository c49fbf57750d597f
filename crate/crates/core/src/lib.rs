//! Finite-dimensional isometry-group displays.
//!
//! The crate builds normed spaces whose linear isometry group is a
//! prescribed finite group, and provides the supporting machinery:
//! exact polyhedral norms, graph automorphisms, Arens-Eells norms on finite
//! metric spaces, and geometric diagnostics.

pub mod dd;
pub mod diagnostics;
pub mod error;
pub mod fixtures;
pub mod free_space;
pub mod graph_norm;
pub mod graphs;
pub mod group;
pub mod linalg;
pub mod lp;
pub mod par;
pub mod pimple;
pub mod polytope;
pub mod report;
pub mod scalar;
pub mod selftest;
pub mod space;

pub use error::{Error, Result};
