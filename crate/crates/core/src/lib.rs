//! Modelling, validation, simulation and analysis of IoT systems that span
//! cloud, fog and battery-powered devices.
//!
//! The usual pipeline is [`modelfmt::parse_model`] →
//! [`validate::validate_model`] → [`engine::run_simulation`] or the
//! [`analysis`] functions.

pub mod analysis;
pub mod diag;
pub mod energy;
pub mod engine;
pub mod extmod;
pub mod model;
pub mod modelfmt;
pub mod synth;
pub mod validate;
