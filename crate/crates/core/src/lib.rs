//! Simulation of a feedback crosspoint resistive-memory circuit that solves
//! linear least-squares problems in one step.

pub mod circuit;
pub mod data;
pub mod device;
pub mod error;
pub mod experiment;
pub mod learn;
pub mod mapping;
pub mod numerics;

pub use error::{Error, Result};
