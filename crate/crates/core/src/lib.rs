//! Simulation library for wideband multiuser MIMO downlinks assisted by a
//! passive reconfigurable reflecting surface.
//!
//! The crate covers the full experiment pipeline:
//!
//! * [`channel`] — clustered delay-tap mmWave channel synthesis;
//! * [`csi`] — pilot-based least-squares channel estimation and its
//!   statistical error model;
//! * [`transceiver`] — robust MMSE precoders/filters, broadcast/multiple-access
//!   duality transforms, MSE and sum-rate evaluation;
//! * [`optimizer`] — alternating MSE minimization with projected-gradient
//!   updates of the surface phases;
//! * [`experiment`] — baselines, Monte Carlo sweeps and CSV emission.

pub mod channel;
pub mod config;
pub mod csi;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod model;
pub mod optimizer;
pub mod transceiver;
pub mod validate;

pub use config::{CsiMode, SystemConfig};
pub use csi::CsiEstimate;
pub use error::{Error, Result};
pub use linalg::{CMat, CVec};
pub use model::{ChannelSet, IrsPhases, NoiseModel};
pub use optimizer::{PgSettings, RunTrace};
pub use transceiver::TransceiverState;
