//! Finite-horizon games among teams with delayed intra-team information
//! sharing.
//!
//! The crate turns a game among teams into a game among coordinators that
//! choose prescriptions, tracks the beliefs those coordinators need, solves
//! for equilibria in compressed-information strategies where possible and
//! audits any candidate profile with an exact best-response oracle.

pub mod belief;
pub mod coord;
pub mod error;
pub mod model;
pub mod nf;
pub mod reference;
pub mod rollout;
pub mod solve;
pub mod stage;
pub mod util;
pub mod verify;

pub use error::{Error, Result};
pub use model::{GameSpec, SpecError, Time};
