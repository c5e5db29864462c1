//! Large deviations, simulation and Monte Carlo verification for the
//! α-stable local time fractional Brownian motion `Z(t) = W^H(L_t)`.
//!
//! The crate is split along the lines of the computation:
//!
//! * [`model`] holds parameter records, closed-form constants, moment
//!   formulas and rate functions.
//! * [`simulate`] generates stable Lévy paths, fBm, local times and their
//!   composition, reproducibly from a master seed.
//! * [`growth`] recovers order and type of moment generating functions
//!   from their Taylor coefficients.
//! * [`verify`] runs Monte Carlo campaigns against the closed forms.

pub mod error;
pub mod growth;
pub mod io;
pub mod model;
pub mod parallel;
pub mod quad;
pub mod rng;
pub mod simulate;
pub mod special;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
pub use model::{ExtReal, ModelParams, RateFunctionSpec, RateKind, StableParams};
