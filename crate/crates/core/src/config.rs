//! Scenario configuration: dimensions, powers, channel-model constants and
//! optimizer settings.
//!
//! All powers are linear; decibels appear only at the configuration boundary
//! (`snr_db`). The per-subcarrier SNR convention ties the total transmit
//! power to the noise power as `P_T = L * 10^(snr_db/10) * noise_power`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How channel state information is obtained and used by the design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsiMode {
    /// Designs see the true channels; error statistics are zero.
    Perfect,
    /// Designs see noisy estimates and account for the error statistics.
    Robust,
    /// Designs see noisy estimates but ignore the error statistics.
    NonRobust,
}

/// Full scenario description. Immutable after construction.
#[derive(Debug, Clone, Serialize)]
pub struct SystemConfig {
    /// Transmit antennas at the base station.
    pub num_tx_antennas: usize,
    /// Receive antennas per user.
    pub num_rx_antennas: usize,
    /// Number of users.
    pub num_users: usize,
    /// OFDM subcarriers.
    pub num_subcarriers: usize,
    /// Reflecting elements on the surface (0 disables the reflected link).
    pub num_irs_elements: usize,
    /// Data streams per user per subcarrier (constant allocation).
    pub streams_per_user: usize,
    /// Total transmit power (linear).
    pub total_power: f64,
    /// Receiver noise power per antenna (linear).
    pub noise_power: f64,
    /// Per-subcarrier SNR in dB, consistent with `total_power`.
    pub snr_db: f64,
    /// Carrier frequency in Hz.
    pub carrier_freq_hz: f64,
    /// Signal bandwidth in Hz.
    pub bandwidth_hz: f64,
    /// Sampling rate in Hz; the tap spacing is its inverse.
    pub sample_rate_hz: f64,
    /// Number of delay taps in the time-dispersive channel model.
    pub num_delay_taps: usize,
    /// Propagation paths on the BS-IRS link.
    pub paths_bs_irs: usize,
    /// Propagation paths on each IRS-user link.
    pub paths_irs_user: usize,
    /// Propagation paths on each direct BS-user link.
    pub paths_direct: usize,
    /// Raised-cosine roll-off factor in [0, 1].
    pub rolloff: f64,
    /// Initial projected-gradient step size.
    pub pg_initial_step: f64,
    /// Stopping threshold on the MSE decrease per iteration.
    pub mse_tolerance: f64,
    /// Maximum outer iterations of the alternating minimization.
    pub max_iterations: usize,
    /// Maximum step halvings inside one projected-gradient update.
    pub max_halvings: usize,
    /// Base seed for all random draws.
    pub rng_seed: u64,
    /// CSI acquisition/usage mode.
    pub csi_mode: CsiMode,
    /// Optional phase-shift quantization resolution in bits.
    pub quantization_bits: Option<u32>,
    /// Use the conventional negative sign in the tap-to-frequency exponent
    /// instead of the default positive sign.
    pub negative_freq_exponent: bool,
    /// Reset the gradient step size to `pg_initial_step` at each outer
    /// iteration instead of carrying it across iterations.
    pub pg_step_reset: bool,
}

impl SystemConfig {
    /// Small configuration used throughout tests and quick experiments:
    /// 2 users x 2 rx antennas, 4 tx antennas, 8 subcarriers, 9 reflecting
    /// elements, 2 streams per user, 10 dB per-subcarrier SNR.
    pub fn desk() -> Self {
        let mut cfg = SystemConfig {
            num_tx_antennas: 4,
            num_rx_antennas: 2,
            num_users: 2,
            num_subcarriers: 8,
            num_irs_elements: 9,
            streams_per_user: 2,
            total_power: 0.0,
            noise_power: 1.0,
            snr_db: 10.0,
            carrier_freq_hz: 28e9,
            bandwidth_hz: 400e6,
            sample_rate_hz: 1.76e9,
            num_delay_taps: 8,
            paths_bs_irs: 4,
            paths_irs_user: 4,
            paths_direct: 4,
            rolloff: 0.25,
            // a step suited to the gradient magnitudes at this scale; the
            // generic config-file default stays at 1.0
            pg_initial_step: 16.0,
            mse_tolerance: 0.0,
            max_iterations: 100,
            max_halvings: 30,
            rng_seed: 1,
            csi_mode: CsiMode::Perfect,
            quantization_bits: None,
            negative_freq_exponent: false,
            pg_step_reset: false,
        };
        cfg.set_snr_db(10.0);
        cfg.mse_tolerance = cfg.default_mse_tolerance();
        cfg
    }

    /// Full-scale configuration:
    /// 3 users x 4 rx antennas, 9 tx antennas, 32 subcarriers, 25 elements.
    pub fn full_scale() -> Self {
        let mut cfg = Self::desk();
        cfg.num_tx_antennas = 9;
        cfg.num_rx_antennas = 4;
        cfg.num_users = 3;
        cfg.num_subcarriers = 32;
        cfg.num_irs_elements = 25;
        cfg.set_snr_db(10.0);
        cfg.mse_tolerance = cfg.default_mse_tolerance();
        cfg
    }

    /// Set the per-subcarrier SNR and derive the total power from it.
    pub fn set_snr_db(&mut self, snr_db: f64) {
        self.snr_db = snr_db;
        self.total_power =
            self.num_subcarriers as f64 * 10f64.powf(snr_db / 10.0) * self.noise_power;
    }

    /// Default stopping threshold, scaled by the problem size
    /// (total streams times subcarriers).
    pub fn default_mse_tolerance(&self) -> f64 {
        1e-5 * self.total_streams() as f64 * self.num_subcarriers as f64
    }

    /// Streams allocated to user `k` at subcarrier `ell` (constant map).
    #[inline]
    pub fn streams(&self, _k: usize, _ell: usize) -> usize {
        self.streams_per_user
    }

    /// Total streams at one subcarrier.
    #[inline]
    pub fn streams_per_subcarrier(&self) -> usize {
        self.num_users * self.streams_per_user
    }

    /// Total streams across all subcarriers.
    #[inline]
    pub fn total_streams(&self) -> usize {
        self.streams_per_subcarrier() * self.num_subcarriers
    }

    /// Power available at each subcarrier, `P_T / L`.
    #[inline]
    pub fn power_per_subcarrier(&self) -> f64 {
        self.total_power / self.num_subcarriers as f64
    }

    /// Scale of the channel estimation error covariance, `L / P_T`.
    #[inline]
    pub fn error_scale(&self) -> f64 {
        self.num_subcarriers as f64 / self.total_power
    }

    /// Tap spacing of the time-dispersive channel model.
    #[inline]
    pub fn sample_period(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }

    /// Frequency assigned to subcarrier `ell` (0-based), spreading the
    /// bandwidth symmetrically around the carrier.
    pub fn subcarrier_freq_hz(&self, ell: usize) -> f64 {
        let l = self.num_subcarriers as f64;
        self.carrier_freq_hz + self.bandwidth_hz * (ell as f64 / l - 0.5)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            (self.num_tx_antennas, "num_tx_antennas"),
            (self.num_rx_antennas, "num_rx_antennas"),
            (self.num_users, "num_users"),
            (self.num_subcarriers, "num_subcarriers"),
            (self.streams_per_user, "streams_per_user"),
            (self.num_delay_taps, "num_delay_taps"),
            (self.paths_bs_irs, "paths_bs_irs"),
            (self.paths_irs_user, "paths_irs_user"),
            (self.paths_direct, "paths_direct"),
            (self.max_iterations, "max_iterations"),
        ];
        for (v, name) in positive {
            if v == 0 {
                return Err(Error::config(format!("{name} must be positive")));
            }
        }
        if self.total_power <= 0.0 {
            return Err(Error::config("total_power must be positive"));
        }
        if self.noise_power <= 0.0 {
            return Err(Error::config("noise_power must be positive"));
        }
        if self.mse_tolerance <= 0.0 {
            return Err(Error::config("mse_tolerance must be positive"));
        }
        if self.pg_initial_step <= 0.0 {
            return Err(Error::config("pg_initial_step must be positive"));
        }
        if !(0.0..=1.0).contains(&self.rolloff) {
            return Err(Error::config("rolloff must lie in [0, 1]"));
        }
        if self.streams_per_user > self.num_rx_antennas.min(self.num_tx_antennas) {
            return Err(Error::config(
                "streams_per_user exceeds min(num_rx_antennas, num_tx_antennas)",
            ));
        }
        if self.streams_per_subcarrier() > self.num_tx_antennas {
            return Err(Error::config(
                "total streams per subcarrier exceed num_tx_antennas",
            ));
        }
        if self.num_subcarriers < self.num_delay_taps {
            return Err(Error::config(
                "num_subcarriers must be at least num_delay_taps",
            ));
        }
        if let Some(bits) = self.quantization_bits {
            if bits == 0 {
                return Err(Error::config("quantization_bits must be at least 1"));
            }
        }
        let expected = self.num_subcarriers as f64
            * 10f64.powf(self.snr_db / 10.0)
            * self.noise_power;
        if (expected - self.total_power).abs() > 1e-6 * expected.max(self.total_power) {
            return Err(Error::config(
                "total_power is inconsistent with snr_db and noise_power",
            ));
        }
        Ok(())
    }

    /// Parse from TOML text. Unknown keys are rejected.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: ConfigFile =
            toml::from_str(text).map_err(|e| Error::config(format!("config parse: {e}")))?;
        raw.into_config()
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }
}

/// On-disk form of [`SystemConfig`]. Exactly one of `total_power` / `snr_db`
/// fixes the power budget; the other is derived.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub num_tx_antennas: usize,
    pub num_rx_antennas: usize,
    pub num_users: usize,
    pub num_subcarriers: usize,
    pub num_irs_elements: usize,
    pub streams_per_user: usize,
    pub total_power: Option<f64>,
    pub snr_db: Option<f64>,
    #[serde(default = "defaults::noise_power")]
    pub noise_power: f64,
    #[serde(default = "defaults::carrier_freq_hz")]
    pub carrier_freq_hz: f64,
    #[serde(default = "defaults::bandwidth_hz")]
    pub bandwidth_hz: f64,
    #[serde(default = "defaults::sample_rate_hz")]
    pub sample_rate_hz: f64,
    #[serde(default = "defaults::num_delay_taps")]
    pub num_delay_taps: usize,
    #[serde(default = "defaults::paths")]
    pub paths_bs_irs: usize,
    #[serde(default = "defaults::paths")]
    pub paths_irs_user: usize,
    #[serde(default = "defaults::paths")]
    pub paths_direct: usize,
    #[serde(default = "defaults::rolloff")]
    pub rolloff: f64,
    #[serde(default = "defaults::pg_initial_step")]
    pub pg_initial_step: f64,
    pub mse_tolerance: Option<f64>,
    #[serde(default = "defaults::max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "defaults::max_halvings")]
    pub max_halvings: usize,
    #[serde(default = "defaults::rng_seed")]
    pub rng_seed: u64,
    #[serde(default = "defaults::csi_mode")]
    pub csi_mode: CsiMode,
    #[serde(default)]
    pub quantization_bits: Option<u32>,
    #[serde(default)]
    pub negative_freq_exponent: bool,
    #[serde(default)]
    pub pg_step_reset: bool,
}

mod defaults {
    use super::CsiMode;
    pub fn noise_power() -> f64 {
        1.0
    }
    pub fn carrier_freq_hz() -> f64 {
        28e9
    }
    pub fn bandwidth_hz() -> f64 {
        400e6
    }
    pub fn sample_rate_hz() -> f64 {
        1.76e9
    }
    pub fn num_delay_taps() -> usize {
        8
    }
    pub fn paths() -> usize {
        4
    }
    pub fn rolloff() -> f64 {
        0.25
    }
    pub fn pg_initial_step() -> f64 {
        1.0
    }
    pub fn max_iterations() -> usize {
        100
    }
    pub fn max_halvings() -> usize {
        30
    }
    pub fn rng_seed() -> u64 {
        1
    }
    pub fn csi_mode() -> CsiMode {
        CsiMode::Perfect
    }
}

impl ConfigFile {
    pub fn into_config(self) -> Result<SystemConfig> {
        let l = self.num_subcarriers as f64;
        let (total_power, snr_db) = match (self.total_power, self.snr_db) {
            (Some(_), Some(_)) => {
                return Err(Error::config(
                    "specify exactly one of total_power and snr_db",
                ))
            }
            (None, None) => {
                return Err(Error::config("one of total_power or snr_db is required"))
            }
            (Some(p), None) => {
                if p <= 0.0 {
                    return Err(Error::config("total_power must be positive"));
                }
                (p, 10.0 * (p / (l * self.noise_power)).log10())
            }
            (None, Some(s)) => (l * 10f64.powf(s / 10.0) * self.noise_power, s),
        };
        let mut cfg = SystemConfig {
            num_tx_antennas: self.num_tx_antennas,
            num_rx_antennas: self.num_rx_antennas,
            num_users: self.num_users,
            num_subcarriers: self.num_subcarriers,
            num_irs_elements: self.num_irs_elements,
            streams_per_user: self.streams_per_user,
            total_power,
            noise_power: self.noise_power,
            snr_db,
            carrier_freq_hz: self.carrier_freq_hz,
            bandwidth_hz: self.bandwidth_hz,
            sample_rate_hz: self.sample_rate_hz,
            num_delay_taps: self.num_delay_taps,
            paths_bs_irs: self.paths_bs_irs,
            paths_irs_user: self.paths_irs_user,
            paths_direct: self.paths_direct,
            rolloff: self.rolloff,
            pg_initial_step: self.pg_initial_step,
            mse_tolerance: 0.0,
            max_iterations: self.max_iterations,
            max_halvings: self.max_halvings,
            rng_seed: self.rng_seed,
            csi_mode: self.csi_mode,
            quantization_bits: self.quantization_bits,
            negative_freq_exponent: self.negative_freq_exponent,
            pg_step_reset: self.pg_step_reset,
        };
        cfg.mse_tolerance = self
            .mse_tolerance
            .unwrap_or_else(|| cfg.default_mse_tolerance());
        cfg.validate()?;
        Ok(cfg)
    }
}
