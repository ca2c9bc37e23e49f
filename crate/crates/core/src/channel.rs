//! Frequency-selective mmWave channel synthesis.
//!
//! Channels are built from a clustered time-tap model: each propagation path
//! has a complex gain, a delay shaped by a raised-cosine pulse, and planar
//! array responses at both ends. Taps are then converted to per-subcarrier
//! frequency responses.

use num_complex::Complex64;
use rand::Rng;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};
use crate::model::ChannelSet;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// One propagation path of a clustered channel.
#[derive(Debug, Clone)]
pub struct PathParams {
    pub gain: Complex64,
    /// Relative delay in seconds, within `[0, (L_D - 1) T_s]`.
    pub delay_s: f64,
    /// Azimuth / elevation angles of arrival and departure, radians in
    /// `[0, pi]`.
    pub aoa_azimuth: f64,
    pub aoa_elevation: f64,
    pub aod_azimuth: f64,
    pub aod_elevation: f64,
}

/// Uniform planar array of `n_a x n_b` elements with the given spacing.
#[derive(Debug, Clone, Copy)]
pub struct ArrayGeometry {
    pub n_a: usize,
    pub n_b: usize,
    /// Inter-element spacing in meters.
    pub spacing_m: f64,
}

impl ArrayGeometry {
    /// Squarest factorization of `ports`: the largest divisor not exceeding
    /// `ceil(sqrt(ports))` becomes one side.
    pub fn squarest(ports: usize, spacing_m: f64) -> Self {
        if ports == 0 {
            return ArrayGeometry { n_a: 0, n_b: 0, spacing_m };
        }
        let mut a = (ports as f64).sqrt().ceil() as usize;
        while a > 1 && !ports.is_multiple_of(a) {
            a -= 1;
        }
        ArrayGeometry { n_a: a, n_b: ports / a, spacing_m }
    }

    /// Half-wavelength spacing at the carrier frequency.
    pub fn half_wavelength(ports: usize, carrier_freq_hz: f64) -> Self {
        Self::squarest(ports, SPEED_OF_LIGHT / (2.0 * carrier_freq_hz))
    }

    pub fn ports(&self) -> usize {
        self.n_a * self.n_b
    }
}

#[inline]
fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Raised-cosine pulse amplitude at time `t` for symbol period `t_s`.
///
/// Returns the analytic limit `(pi/4) sinc(1/(2 rolloff))` at the two
/// removable singularities `t = +- t_s / (2 rolloff)`.
pub fn raised_cosine(t: f64, t_s: f64, rolloff: f64) -> f64 {
    let x = t / t_s;
    if rolloff == 0.0 {
        return sinc(x);
    }
    let den = 1.0 - (2.0 * rolloff * x) * (2.0 * rolloff * x);
    if den.abs() < 1e-10 {
        let s = 1.0 / (2.0 * rolloff);
        return std::f64::consts::FRAC_PI_4 * sinc(s);
    }
    sinc(x) * (std::f64::consts::PI * rolloff * x).cos() / den
}

/// Unit-norm planar-array response for azimuth `phi` and elevation `psi`.
///
/// Element `(p, q)` carries the phase
/// `(2 pi d f / c) (p sin(phi) sin(psi) + q cos(psi))`.
pub fn upa_response(phi: f64, psi: f64, geom: &ArrayGeometry, freq_hz: f64) -> CVec {
    let ports = geom.ports();
    if ports == 0 {
        return CVec::zeros(0);
    }
    let scale = 1.0 / (ports as f64).sqrt();
    let k = std::f64::consts::TAU * geom.spacing_m * freq_hz / SPEED_OF_LIGHT;
    let u = phi.sin() * psi.sin();
    let v = psi.cos();
    CVec::from_fn(ports, |i, _| {
        let p = (i / geom.n_b) as f64;
        let q = (i % geom.n_b) as f64;
        linalg::cis(k * (p * u + q * v)) * scale
    })
}

/// Time-tap channel matrices for one link.
///
/// Tap `m` is `gamma * sum_j beta_j p_rc(m T_s - tau_j) a_r a_t^*` with the
/// power normalization `gamma = sqrt(rows * cols / num_paths)`. Array
/// responses are evaluated at the carrier frequency.
pub fn gen_time_taps(
    paths: &[PathParams],
    geom_rx: &ArrayGeometry,
    geom_tx: &ArrayGeometry,
    cfg: &SystemConfig,
) -> Result<Vec<CMat>> {
    if paths.is_empty() {
        return Err(Error::config("gen_time_taps requires at least one path"));
    }
    let rows = geom_rx.ports();
    let cols = geom_tx.ports();
    let t_s = cfg.sample_period();
    let gamma = ((rows * cols) as f64 / paths.len() as f64).sqrt();
    let mut taps = vec![CMat::zeros(rows, cols); cfg.num_delay_taps];
    for path in paths {
        let a_r = upa_response(
            path.aoa_azimuth,
            path.aoa_elevation,
            geom_rx,
            cfg.carrier_freq_hz,
        );
        let a_t = upa_response(
            path.aod_azimuth,
            path.aod_elevation,
            geom_tx,
            cfg.carrier_freq_hz,
        );
        for (m, tap) in taps.iter_mut().enumerate() {
            let pulse = raised_cosine(m as f64 * t_s - path.delay_s, t_s, cfg.rolloff);
            if pulse == 0.0 {
                continue;
            }
            let w = path.gain * gamma * pulse;
            for i in 0..rows {
                let wi = w * a_r[i];
                for j in 0..cols {
                    tap[(i, j)] += wi * a_t[j].conj();
                }
            }
        }
    }
    Ok(taps)
}

/// Frequency response at (0-based) subcarrier index `ell`:
/// `sum_m taps[m] e^{sign * j 2 pi m ell / num_subcarriers}`.
pub fn freq_response_at(taps: &[CMat], ell: i64, num_subcarriers: usize, negative: bool) -> CMat {
    let (rows, cols) = taps[0].shape();
    let mut h = CMat::zeros(rows, cols);
    let sign = if negative { -1.0 } else { 1.0 };
    for (m, tap) in taps.iter().enumerate() {
        let angle =
            sign * std::f64::consts::TAU * (m as f64) * (ell as f64) / num_subcarriers as f64;
        let w = linalg::cis(angle);
        h.zip_apply(tap, |o, t| *o += w * t);
    }
    h
}

/// Convert delay taps to `num_subcarriers` frequency responses.
pub fn taps_to_frequency(
    taps: &[CMat],
    num_subcarriers: usize,
    negative: bool,
) -> Result<Vec<CMat>> {
    if num_subcarriers < taps.len() {
        return Err(Error::config(
            "num_subcarriers must be at least the number of delay taps",
        ));
    }
    Ok((0..num_subcarriers)
        .map(|ell| freq_response_at(taps, ell as i64, num_subcarriers, negative))
        .collect())
}

/// Draw the random path parameters for one link: standard complex Gaussian
/// gains, angles uniform on `[0, pi]`, delays uniform on the tap span.
pub fn draw_paths<R: Rng + ?Sized>(
    num_paths: usize,
    cfg: &SystemConfig,
    rng: &mut R,
) -> Vec<PathParams> {
    let delay_span = (cfg.num_delay_taps - 1) as f64 * cfg.sample_period();
    (0..num_paths)
        .map(|_| PathParams {
            gain: linalg::standard_complex(rng),
            delay_s: rng.random_range(0.0..=delay_span),
            aoa_azimuth: rng.random_range(0.0..=std::f64::consts::PI),
            aoa_elevation: rng.random_range(0.0..=std::f64::consts::PI),
            aod_azimuth: rng.random_range(0.0..=std::f64::consts::PI),
            aod_elevation: rng.random_range(0.0..=std::f64::consts::PI),
        })
        .collect()
}

/// Synthesize all direct, BS-surface and surface-user channels for one
/// scenario realization. Deterministic given the RNG state.
pub fn gen_scenario<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Result<ChannelSet> {
    let bs = ArrayGeometry::half_wavelength(cfg.num_tx_antennas, cfg.carrier_freq_hz);
    let user = ArrayGeometry::half_wavelength(cfg.num_rx_antennas, cfg.carrier_freq_hz);
    let irs = ArrayGeometry::half_wavelength(cfg.num_irs_elements, cfg.carrier_freq_hz);
    let l = cfg.num_subcarriers;

    let mut direct = Vec::with_capacity(cfg.num_users * l);
    for _ in 0..cfg.num_users {
        let paths = draw_paths(cfg.paths_direct, cfg, rng);
        let taps = gen_time_taps(&paths, &user, &bs, cfg)?;
        direct.extend(taps_to_frequency(&taps, l, cfg.negative_freq_exponent)?);
    }

    let bs_irs = if cfg.num_irs_elements > 0 {
        let paths = draw_paths(cfg.paths_bs_irs, cfg, rng);
        let taps = gen_time_taps(&paths, &irs, &bs, cfg)?;
        taps_to_frequency(&taps, l, cfg.negative_freq_exponent)?
    } else {
        vec![CMat::zeros(0, cfg.num_tx_antennas); l]
    };

    let mut irs_user = Vec::with_capacity(cfg.num_users * l);
    for _ in 0..cfg.num_users {
        if cfg.num_irs_elements > 0 {
            let paths = draw_paths(cfg.paths_irs_user, cfg, rng);
            let taps = gen_time_taps(&paths, &user, &irs, cfg)?;
            irs_user.extend(taps_to_frequency(&taps, l, cfg.negative_freq_exponent)?);
        } else {
            irs_user.extend((0..l).map(|_| CMat::zeros(cfg.num_rx_antennas, 0)));
        }
    }

    ChannelSet::new(
        cfg.num_users,
        l,
        cfg.num_irs_elements,
        direct,
        bs_irs,
        irs_user,
    )
}

// ---------------------------------------------------------------------------
// Channel dump fixtures
// ---------------------------------------------------------------------------

const DUMP_MAGIC: &[u8; 8] = b"IRSCHDMP";

/// Write a channel set as a binary fixture: one record per `(link, k, ell)`
/// with row-major entries as pairs of little-endian 64-bit floats.
pub fn write_channel_dump(set: &ChannelSet, path: impl AsRef<std::path::Path>) -> Result<()> {
    use std::io::Write;
    let path = path.as_ref();
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(DUMP_MAGIC);
    for v in [
        1u32,
        set.num_users as u32,
        set.num_subcarriers as u32,
        set.num_irs_elements as u32,
    ] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut push_record = |link: u8, k: u32, ell: u32, m: &CMat| {
        buf.push(link);
        buf.extend_from_slice(&k.to_le_bytes());
        buf.extend_from_slice(&ell.to_le_bytes());
        buf.extend_from_slice(&(m.nrows() as u32).to_le_bytes());
        buf.extend_from_slice(&(m.ncols() as u32).to_le_bytes());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                buf.extend_from_slice(&m[(i, j)].re.to_le_bytes());
                buf.extend_from_slice(&m[(i, j)].im.to_le_bytes());
            }
        }
    };
    for k in 0..set.num_users {
        for ell in 0..set.num_subcarriers {
            push_record(0, k as u32, ell as u32, set.direct(k, ell));
        }
    }
    for ell in 0..set.num_subcarriers {
        push_record(1, 0, ell as u32, set.bs_irs(ell));
    }
    for k in 0..set.num_users {
        for ell in 0..set.num_subcarriers {
            push_record(2, k as u32, ell as u32, set.irs_user(k, ell));
        }
    }
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&buf).map_err(|e| Error::io(path, e))
}

/// Read a channel dump written by [`write_channel_dump`].
pub fn read_channel_dump(path: impl AsRef<std::path::Path>) -> Result<ChannelSet> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut cursor = 0usize;
    let fail = || Error::config(format!("malformed channel dump: {}", path.display()));
    let take = |cursor: &mut usize, n: usize| -> Result<&[u8]> {
        if *cursor + n > bytes.len() {
            return Err(fail());
        }
        let s = &bytes[*cursor..*cursor + n];
        *cursor += n;
        Ok(s)
    };
    if take(&mut cursor, 8)? != DUMP_MAGIC {
        return Err(fail());
    }
    let read_u32 = |cursor: &mut usize| -> Result<u32> {
        Ok(u32::from_le_bytes(take(cursor, 4)?.try_into().unwrap()))
    };
    let version = read_u32(&mut cursor)?;
    if version != 1 {
        return Err(fail());
    }
    let num_users = read_u32(&mut cursor)? as usize;
    let num_subcarriers = read_u32(&mut cursor)? as usize;
    let num_irs = read_u32(&mut cursor)? as usize;
    let read_record = |cursor: &mut usize| -> Result<(u8, usize, usize, CMat)> {
        let link = take(cursor, 1)?[0];
        let k = u32::from_le_bytes(take(cursor, 4)?.try_into().unwrap()) as usize;
        let ell = u32::from_le_bytes(take(cursor, 4)?.try_into().unwrap()) as usize;
        let rows = u32::from_le_bytes(take(cursor, 4)?.try_into().unwrap()) as usize;
        let cols = u32::from_le_bytes(take(cursor, 4)?.try_into().unwrap()) as usize;
        let mut m = CMat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                let re = f64::from_le_bytes(take(cursor, 8)?.try_into().unwrap());
                let im = f64::from_le_bytes(take(cursor, 8)?.try_into().unwrap());
                m[(i, j)] = Complex64::new(re, im);
            }
        }
        Ok((link, k, ell, m))
    };
    let mut direct = Vec::with_capacity(num_users * num_subcarriers);
    let mut bs_irs = Vec::with_capacity(num_subcarriers);
    let mut irs_user = Vec::with_capacity(num_users * num_subcarriers);
    let total = num_users * num_subcarriers * 2 + num_subcarriers;
    for _ in 0..total {
        let (link, _k, _ell, m) = read_record(&mut cursor)?;
        match link {
            0 => direct.push(m),
            1 => bs_irs.push(m),
            2 => irs_user.push(m),
            _ => return Err(fail()),
        }
    }
    if cursor != bytes.len() {
        return Err(fail());
    }
    ChannelSet::new(num_users, num_subcarriers, num_irs, direct, bs_irs, irs_user)
}
