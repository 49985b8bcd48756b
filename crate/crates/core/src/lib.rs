//! CARFAC cochlea model for real-time audio front ends.
//!
//! The crate is split into four layers:
//!
//! - [`model`]: the floating-point reference chain (CAR cascade, inner and
//!   outer hair cells, four-stage AGC loop) and channel design.
//! - [`approx`]: division-free replacements for the hair-cell nonlinearities
//!   and the DC-gain factor, plus error sweeps against the exact forms.
//! - [`fixed`]: a bit-deterministic fixed-point datapath that runs the
//!   approximate chain with 18-bit multiplier operands, and a schedule
//!   analyzer for time-multiplexed hardware.
//! - [`stream`]: WAV / raw 24-bit readers, multi-sensor synchronization,
//!   bounded-queue pipelines and cochleagram writers.

pub mod approx;
pub mod error;
pub mod fixed;
pub mod model;
pub mod stream;

pub use error::{Error, Result};
pub use model::{
    design_carfac, CarfacCoeffs, CarfacParams, CarfacState, Mode,
};
