//! Simulation and analysis of a transmon coupled to a harmonic oscillator at
//! the e-f resonance.
//!
//! * [`hilbert`]: product basis, operators, excitation blocks, displacements.
//! * [`spectrum`]: dressed ladders (closed form, series, numeric), Kerr profile
//!   and scheme comparison.
//! * [`dynamics`]: Lindblad model, steady state and time evolution.
//! * [`tomography`]: displaced photon-counting POVM, maximum-likelihood
//!   reconstruction, Wigner function.
//! * [`experiments`]: the scenarios behind the `efres` command (spectroscopy,
//!   calibration, tomography, power sweep, coherence decay).
//!
//! Frequencies are in GHz, couplings and anharmonicities in MHz, times in µs.
//!
//! ```
//! use efres::spectrum::{kerr_report, ladders_numeric};
//! let p = efres::SystemParams::device().with_n_max(30);
//! let k = kerr_report(&ladders_numeric(&p).unwrap());
//! assert!((k.k_series + 346.5).abs() < 0.1);
//! ```

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod io;
pub mod linalg;
pub mod params;
pub mod plot;
pub mod spectrum;
pub mod tomography;
pub mod experiments;

pub use error::{Error, Result};
pub use params::SystemParams;
