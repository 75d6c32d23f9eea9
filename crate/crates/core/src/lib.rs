//! Rational and integral homology of free loop spaces of highly connected
//! manifolds, computed from a finite model built on the intersection form.

pub mod arith;
pub mod bv;
pub mod error;
pub mod forms;
pub mod homology;
pub mod linalg;
pub mod oracles;
pub mod report;
pub mod sparse;
pub mod tensor;

pub use error::{Error, Result};
pub use forms::{CoefficientRing, IntersectionForm};
