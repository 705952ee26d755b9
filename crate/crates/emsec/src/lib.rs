//! Desk-scale laboratory for radio-frequency side-channel analysis of a
//! QKD sender.
//!
//! The sender emits one of four polarization symbols (H, V, P, M) per clock
//! cycle; its electronics leak a symbol-dependent RF signature. This crate
//! provides everything needed to study that leakage end to end without
//! hardware:
//!
//! * [`synth`] — a synthetic emission-trace oracle with controllable
//!   symbol-transition leakage, clock harmonics, interferers, and noise,
//!   standing in for the probe/amplifier/oscilloscope chain;
//! * [`dsp`] — clock recovery, trace alignment, and Bartlett spectral
//!   estimation;
//! * [`dataset`] — labeled fixed-length snippet extraction, normalization,
//!   and shift augmentation;
//! * [`nn`] — a from-scratch 1D convolutional classifier (dilated
//!   convolutions, batch norm, spatial dropout, GeLU) trained with Adam;
//! * [`attack`] — the two-phase profiled attack and its evaluation metrics:
//!   accuracy with a binomial significance gate, confusion matrices, sifted
//!   bit-mapping accuracies, selective channel blocking, and far-field mode
//!   classification;
//! * [`io`] — binary trace files, model checkpoints, and CSV reports.

pub mod attack;
pub mod dataset;
pub mod dsp;
pub mod error;
mod gauss;
pub mod io;
pub mod key;
pub mod nn;
pub mod synth;
pub mod trace;

pub use error::{Error, Result};
pub use key::{RawKey, Symbol};
pub use trace::{rms, Trace, TraceMeta};
