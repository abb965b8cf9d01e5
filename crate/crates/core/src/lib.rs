//! Symmetry-breaking instabilities of square convection patterns.
//!
//! A library and CLI around three pieces:
//!
//! - the D4-equivariant pitchfork and Hopf normal forms with pattern drift,
//! - a low-order model of compressible magnetoconvection exhibiting both
//!   instabilities (travelling squares and three families of pulsating
//!   oscillations),
//! - generic machinery to simulate them, refine equilibria and periodic
//!   orbits, detect bifurcations along parameter sweeps, and classify
//!   solutions by their spatio-temporal isotropy.

pub mod classify;
pub mod cli;
pub mod dynamics;
mod error;
pub mod io;
pub mod models;
pub mod sweep;
pub mod symmetry;

pub use error::{Error, Result};
