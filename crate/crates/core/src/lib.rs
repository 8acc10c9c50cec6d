//! Antenna link budgets, one-port S-parameter analysis, tower mesh planning
//! and duty-cycled beacon simulation.
//!
//! The modules build on each other: [`linkbudget`] is the closed-form Friis
//! chain, [`mesh`] uses it to decide which tower-to-tower links close, and
//! [`dutycycle`] uses it again to decide when a beaconing tower discovers a
//! device. [`sparams`] reads Touchstone sweeps whose mismatch efficiency can
//! be folded into an antenna's efficiency.

pub mod dutycycle;
mod error;
pub mod linkbudget;
pub mod mesh;
pub mod sparams;

pub use error::{Error, Result};
