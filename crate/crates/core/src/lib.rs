//! Numerical toolkit for nonlinear behaviors organized by singularities.
//!
//! Static behaviors `g(y, u) = 0` are realized as feedback interconnections of
//! sigmoidal nonlinearities ([`nonlinearity`], [`circuits`]), their local
//! singularity conditions are checked ([`singularity`]), their solution sets
//! are traced ([`continuation`]), and the multi-timescale circuits built from
//! them are simulated ([`dynamics`]) and classified ([`regimes`], [`scan`]).

pub mod circuits;
pub mod continuation;
pub mod dynamics;
pub mod error;
pub mod jet;
pub mod nonlinearity;
mod numeric;
pub mod protocols;
pub mod regimes;
pub mod scan;
pub mod singularity;

pub use error::{Error, Result};

/// Toolkit version recorded in artifacts and manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
