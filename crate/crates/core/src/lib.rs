//! Decoherence of oscillator cat states in environments made of several
//! reservoirs at different temperatures.
//!
//! The environment is summarized by an effective temperature `T_eff(t)`;
//! decoherence rates, Wigner-function dynamics and trap heating spectra all
//! follow from it.

pub mod decoherence;
pub mod efftemp;
pub mod error;
pub mod kernels;
pub mod langevin;
pub mod laplace;
pub mod quad;
pub mod special;
pub mod trap;
pub mod units;
pub mod wigner;

pub use error::{Error, Result};
