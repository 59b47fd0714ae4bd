//! Energy transfer between a donor and an acceptor quantum emitter, in free
//! space and inside a single-mode cavity.
//!
//! The crate solves the full Lindblad master equation of the
//! donor-acceptor-cavity system, the linearized second-moment equations, and
//! evaluates closed-form transfer rates, so that each can be checked against
//! the others.

pub mod algebra;
pub mod analytic;
pub mod checks;
pub mod driver;
pub mod error;
pub mod geometry;
pub mod master;
pub mod model;
pub mod moments;
pub mod observables;
pub mod polariton;
pub mod sweep;
pub mod tolerances;

pub use error::{Error, Result};
