//! Weak values of pre- and postselected ensembles, computed two ways.
//!
//! [`exact`] evaluates them as finite-dimensional matrix elements;
//! [`semiclassical`] reads them off complex classical trajectories that obey
//! Klauder's mixed boundary conditions. [`pointer`] simulates the von Neumann
//! measurement that recovers them from a weakly coupled Gaussian pointer.

pub mod error;
pub mod exact;
pub mod model;
pub mod par;
pub mod pointer;
pub mod semiclassical;

pub use error::{Error, Result};
