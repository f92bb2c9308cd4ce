//! Simulator for a photonic recurrent neural network built from a spatial
//! light modulator, a diffractive coupling element and a Boolean mirror
//! readout, trained by greedy reinforcement learning to predict chaotic
//! time series one step ahead.
//!
//! Module map:
//! - [`mackey_glass`]: delay-differential benchmark series and dataset prep
//! - [`topology`]: sparse coupling matrices, their synthesis and physical
//!   derivation from a Fourier-plane diffractive element
//! - [`network`]: the coupled Ikeda-map dynamics and Boolean mirror readout
//! - [`learning`]: greedy single-flip training of the readout weights
//! - [`experiment`]: config-driven end-to-end runs, sweeps and artifacts
//! - [`io`]: plain-text artifact formats (CSV tables, weight strings)
//! - [`plot`]: dependency-free SVG diagnostic plots
//! - [`error`]: shared error and result types

pub mod error;
pub mod experiment;
pub mod io;
pub mod learning;
pub mod mackey_glass;
pub mod network;
pub mod plot;
pub mod topology;

pub use error::{Error, Result};
