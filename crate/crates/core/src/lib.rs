//! Desk-scale numerics for three families of probabilistic inequalities:
//! chaining bounds on suprema of Gaussian processes, concentration and
//! transport inequalities on product spaces, and the free energy of the
//! Sherrington-Kirkpatrick spin glass.
//!
//! Every bound is paired with an independent oracle (exhaustive
//! enumeration, exact linear programming or Monte Carlo) so the inequality
//! can be checked numerically rather than assumed.

pub mod chaining;
pub mod concentration;
pub mod error;
pub mod gp;
pub mod metric;
pub mod reports;
pub mod rng;
pub mod spinglass;
pub mod stats;
pub mod transport;

pub use error::{Error, Result};
