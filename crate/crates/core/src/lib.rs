//! Simulation and analysis toolkit for the Y-00 (alpha-eta) quantum stream
//! cipher: the keyed PSK coding layer, minimum-error detection bounds for
//! the eavesdropper and the legitimate receiver, and replays of the
//! label-measurement attack under noise, misalignment and deliberate signal
//! randomization.

pub mod codec;
pub mod error;
pub mod fockspace;

pub use error::{Error, Result};
pub mod attacks;
pub mod detection;
pub mod runner;
pub mod sampling;
