//! Simulator for spiking sequential logic on a single memristive device.
//!
//! Inputs are applied as a sequence of voltage levels; each level change
//! produces a current spike whose size depends on the device's charge and
//! fatigue memory. Gates are decoded from those spikes.

pub mod adder;
pub mod calibration;
pub mod cli;
pub mod device;
pub mod encoding;
pub mod error;
pub mod io;
pub mod profiles;
pub mod rules;
pub mod sequencer;

pub use error::{Error, Result};
