//! Semiclassical simulation and analysis of Hong-Ou-Mandel interference
//! between polarization-modulated continuous-wave laser fields.
//!
//! The crate is organised in layers:
//!
//! * [`model`] holds the physical parameter types and the deterministic
//!   waveform, envelope and coherence functions.
//! * [`analytic`] evaluates closed-form correlation functions and serves as
//!   the oracle for everything produced by simulation.
//! * [`mcsim`] generates synthetic time-tag streams from a phase-diffusing
//!   laser model with Poisson-thinned detection.
//! * [`tags`] and [`tagfile`] define the in-memory stream and the `HOMTAG01`
//!   binary format.
//! * [`tagproc`] reduces tag streams to coincidences, modulator-phase
//!   histograms, HOM dips, visibility scans and fits.
//! * [`compare`] scores measured curves against the analytic oracle and
//!   [`textio`] reads and writes curves as delimited text.

pub mod analytic;
pub mod compare;
mod error;
pub mod mcsim;
pub mod model;
pub mod tagfile;
pub mod tagproc;
pub mod tags;
pub mod textio;

pub use error::{Error, Result};
