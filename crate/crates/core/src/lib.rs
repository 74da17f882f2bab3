//! Security model and simulator for source-independent quantum random number
//! generators (SI-QRNGs) built on imperfect threshold detectors.
//!
//! The crate is organised bottom-up:
//!
//! - [`detector`]: response probabilities of a single threshold detector, the
//!   first-order afterpulse coefficients and the total afterpulse probability
//!   over a finite or infinite history.
//! - [`source`]: photon-number distributions of the untrusted source, the
//!   Bernoulli loss transform, vacuum probabilities and the Hoeffding
//!   confidence radius of the distribution monitor.
//! - [`entropy`]: click statistics, the X-basis error rate, the worst-case
//!   conditional min-entropy and the prior autocorrelation coefficient.
//! - [`finite`]: statistical deviation of the phase error rate, finite-size
//!   randomness rates, the composable security parameter and the certified
//!   final rate.
//! - [`sim`]: seeded Monte Carlo of the two measurement bases with afterpulse
//!   memory, squashing of double clicks and a Toeplitz extractor.
//! - [`figures`]: parameter sweeps that regenerate the characteristic curves
//!   (autocorrelation, min-entropy, rates, finite sampling).

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detector;
pub mod entropy;
mod error;
pub mod figures;
pub mod finite;
pub mod sim;
pub mod source;

pub use detector::{AfterpulseModel, AfterpulseSpec, DetectorParams, WindowDepth};
pub use entropy::{binary_entropy, ArmTaus, DetectorSet, EntropyReport, PriorResponse};
pub use error::{Error, Result};
pub use finite::{Method, RateReport, SecurityParams};
pub use sim::{BitStream, ClickRecord, PulseTrainConfig, SimulationOutput};
pub use source::{MonitorConfig, PhotonDistribution, TauInterval};
