//! Mixed finite elements for the Stokes eigenvalue problem in the
//! stress-velocity formulation.
//!
//! The stress is sought in a tensor Nédélec space (each row an H(curl)
//! conforming field) and the velocity in discontinuous `P_k`. Pressure and
//! vorticity are recovered from the stress afterwards.

pub mod adapt;
pub mod assembly;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod mesh;
pub mod postproc;
pub mod refelems;
pub mod spaces;
pub mod sparse;
pub mod speig;

pub use error::{Error, Result};
