//! Simulator for ground-state cooling of a spin–vibration system through
//! four-level interference schemes.
//!
//! Two cooling configurations are modeled on the (|A₂⟩, |+1⟩, |0⟩, |−1⟩)
//! internal manifold of a nitrogen-vacancy center coupled to one vibrational
//! mode: an asymmetric scheme combining EIT interference with a single
//! Stark-shift gate, and a symmetric scheme running two Stark-shift gates
//! collaboratively. Three-level reductions of EIT cooling and Stark-shift-gate
//! cooling serve as baselines.
//!
//! The crate provides
//! - dense complex operator construction and solvers ([`operators`]),
//! - rotating-frame Hamiltonians, dark states and gate-point residuals
//!   ([`scheme`]),
//! - Lindblad time evolution and steady states ([`lindblad`]),
//! - force-fluctuation spectra and heating/cooling coefficients
//!   ([`spectrum`]),
//! - end-to-end cooling predictions and robustness scans ([`cooling`]).
//!
//! All internal frequencies are expressed in units of the trap frequency ω_k.

pub mod constants;
pub mod cooling;
pub mod error;
pub mod lindblad;
pub mod operators;
pub mod scheme;
pub mod spectrum;

pub use error::{Error, Result};
