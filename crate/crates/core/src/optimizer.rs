//! Alternating MSE minimization with projected-gradient updates of the
//! surface phases.
//!
//! One outer iteration refreshes precoders and filters in both domains
//! through the duality transforms and the closed-form MMSE expressions, then
//! moves the phase vector along the negative MSE gradient with step halving.
//! The recorded objective is the compact uplink sum-MSE.

use num_complex::Complex64;
use rand::Rng;

use crate::config::SystemConfig;
use crate::csi::CsiEstimate;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};
use crate::model::IrsPhases;
use crate::transceiver::{
    bc_to_mac, mac_to_bc, mmse_downlink_filters, mmse_uplink_filters, mrt_precoders,
    uplink_factors, uplink_mse, TransceiverState,
};

/// Projected-gradient settings.
#[derive(Debug, Clone, Copy)]
pub struct PgSettings {
    /// Initial step size.
    pub initial_step: f64,
    /// Stop when the per-iteration MSE decrease falls below this threshold.
    pub mse_tolerance: f64,
    /// Iteration cap.
    pub max_iterations: usize,
    /// Cap on step halvings inside one phase update.
    pub max_halvings: usize,
    /// Reset the step to `initial_step` at every outer iteration.
    pub reset_step_each_iteration: bool,
}

impl PgSettings {
    pub fn from_config(cfg: &SystemConfig) -> Self {
        PgSettings {
            initial_step: cfg.pg_initial_step,
            mse_tolerance: cfg.mse_tolerance,
            max_iterations: cfg.max_iterations,
            max_halvings: cfg.max_halvings,
            reset_step_each_iteration: cfg.pg_step_reset,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.initial_step <= 0.0 || self.mse_tolerance <= 0.0 || self.max_iterations == 0 {
            return Err(Error::config(
                "pg settings require positive step, tolerance and iteration cap",
            ));
        }
        Ok(())
    }
}

/// One recorded outer iteration.
#[derive(Debug, Clone, Copy)]
pub struct TraceRow {
    pub iteration: usize,
    /// Compact uplink sum-MSE after this iteration.
    pub mse_ul: f64,
    /// Step size in effect after the halvings of this iteration.
    pub step: f64,
    /// Halvings spent in this iteration's phase update.
    pub halvings: usize,
}

/// Iteration history and final outcome of one optimizer run.
#[derive(Debug, Clone)]
pub struct RunTrace {
    pub rows: Vec<TraceRow>,
    /// Outer iterations executed (excluding the initialization row).
    pub iterations: usize,
    /// Whether the MSE decrease fell below the tolerance before the cap.
    pub converged: bool,
    pub wall: std::time::Duration,
}

impl RunTrace {
    /// Largest increase between consecutive recorded MSE values
    /// (non-positive for a monotone trace).
    pub fn max_increase(&self) -> f64 {
        self.rows
            .windows(2)
            .map(|w| w[1].mse_ul - w[0].mse_ul)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn final_mse(&self) -> f64 {
        self.rows.last().map(|r| r.mse_ul).unwrap_or(f64::NAN)
    }
}

/// Feasible-set projector applied after each gradient step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projector {
    /// Entrywise normalization to the unit circle.
    UnitModulus,
    /// Amplitude-free normalization to `||nu||^2 = N`.
    AmplitudeFree,
}

/// How the precoders are refreshed at each outer iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrecoderUpdate {
    /// Uplink-downlink duality cycle.
    Duality,
    /// Re-derive MRT precoders at the current phases.
    Mrt,
}

/// Behavior switches for [`alternating_minimize_with`].
#[derive(Debug, Clone, Copy)]
pub struct AltMinOptions {
    pub projector: Projector,
    pub precoder_update: PrecoderUpdate,
    /// Whether the phase vector is updated at all.
    pub optimize_phases: bool,
    /// Whether the designs include the estimation-error statistics.
    pub robust: bool,
}

impl AltMinOptions {
    pub fn proposed(robust: bool) -> Self {
        AltMinOptions {
            projector: Projector::UnitModulus,
            precoder_update: PrecoderUpdate::Duality,
            optimize_phases: true,
            robust,
        }
    }

    pub fn amplitude_free(robust: bool) -> Self {
        AltMinOptions { projector: Projector::AmplitudeFree, ..Self::proposed(robust) }
    }

    pub fn fixed_phases(robust: bool) -> Self {
        AltMinOptions { optimize_phases: false, ..Self::proposed(robust) }
    }

    pub fn mrt_with_phase_optimization(robust: bool) -> Self {
        AltMinOptions { precoder_update: PrecoderUpdate::Mrt, ..Self::proposed(robust) }
    }
}

/// Entrywise projection onto the unit circle; a vanishing coefficient maps
/// to phase zero.
pub fn project_unit_modulus(raw: &CVec) -> IrsPhases {
    IrsPhases::new(CVec::from_fn(raw.len(), |i, _| {
        let z = raw[i];
        let r = z.norm();
        if r < 1e-300 {
            Complex64::new(1.0, 0.0)
        } else {
            z / r
        }
    }))
}

/// Amplitude-free normalization `sqrt(N) nu / ||nu||`, keeping the total
/// squared magnitude at `N`.
pub fn af_normalize(raw: &CVec) -> Result<IrsPhases> {
    let n = raw.len();
    let norm = raw.norm();
    if norm <= 0.0 {
        return Err(Error::degenerate(
            "amplitude-free normalization of a zero phase vector",
        ));
    }
    let scale = Complex64::new((n as f64).sqrt() / norm, 0.0);
    Ok(IrsPhases::new(raw * scale))
}

fn project(raw: &CVec, projector: Projector) -> Result<IrsPhases> {
    match projector {
        Projector::UnitModulus => Ok(project_unit_modulus(raw)),
        Projector::AmplitudeFree => af_normalize(raw),
    }
}

/// Snap every phase to the nearest of the `2^bits` uniform grid points,
/// breaking ties toward the smaller angle.
pub fn quantize_phases(nu: &IrsPhases, bits: u32) -> IrsPhases {
    let levels = 1u64 << bits;
    let step = std::f64::consts::TAU / levels as f64;
    IrsPhases::new(CVec::from_fn(nu.len(), |i, _| {
        let z = nu.coeffs[i];
        if z.norm() < 1e-300 {
            return Complex64::new(1.0, 0.0);
        }
        let mut phase = z.arg();
        if phase < 0.0 {
            phase += std::f64::consts::TAU;
        }
        let x = phase / step;
        let frac = x - x.floor();
        let m = if frac == 0.5 {
            x.floor() as u64 // tie toward the smaller angle
        } else {
            x.round() as u64
        } % levels;
        linalg::cis(m as f64 * step)
    }))
}

/// Gradient of the compact uplink sum-MSE with respect to the phase
/// coefficients, one complex component per surface element.
///
/// Component `n` is
/// `-tr(B^{-2} T^* C^{-1/2} H_{c,n} H_e^* C^{-1/2,*} T) / c`, the derivative
/// with respect to `nu_n` holding its conjugate fixed; the descent move in
/// [`pg_update`] uses the conjugate of these components.
pub fn mse_gradient_nu(
    mac_precoders: &[CMat],
    nu: &IrsPhases,
    csi: &CsiEstimate,
    robust: bool,
) -> Result<CVec> {
    let n = nu.len();
    let mut grad = CVec::zeros(n);
    if n == 0 {
        return Ok(grad);
    }
    let factors = uplink_factors(mac_precoders, csi, nu, robust)?;
    for ell in 0..csi.num_subcarriers {
        let b_inv = &factors.b_inv[ell];
        let b_inv2 = b_inv * b_inv;
        // Q = M^* B^{-2} U, so that each component is -tr(H_{c,n} Q) / c_ell
        let q = factors.m[ell].adjoint() * b_inv2 * &factors.u[ell];
        for e in 0..n {
            let hc = csi.stacked_cascaded(ell, e);
            grad[e] -= linalg::trace_product(hc, &q) / Complex64::new(factors.c[ell], 0.0);
        }
    }
    Ok(grad)
}

/// One projected-gradient update of the phases at fixed uplink precoders.
///
/// Starting from `mu`, the candidate `project(nu - mu conj(grad))` is halved
/// until the compact uplink MSE no longer exceeds its value at `nu`, up to
/// `max_halvings`; exhaustion keeps `nu` unchanged.
pub fn pg_update(
    nu: &IrsPhases,
    mac_precoders: &[CMat],
    csi: &CsiEstimate,
    mu: f64,
    settings: &PgSettings,
    projector: Projector,
    robust: bool,
) -> Result<(IrsPhases, f64, usize)> {
    if nu.is_empty() {
        return Ok((nu.clone(), mu, 0));
    }
    let grad = mse_gradient_nu(mac_precoders, nu, csi, robust)?;
    if grad.norm() == 0.0 {
        return Ok((nu.clone(), mu, 0));
    }
    let descent = CVec::from_fn(nu.len(), |i, _| grad[i].conj());
    let base = uplink_mse(mac_precoders, nu, csi, robust)?;
    let mut mu = mu;
    let mut halvings = 0usize;
    loop {
        let raw = &nu.coeffs - &descent * Complex64::new(mu, 0.0);
        let candidate = project(&raw, projector)?;
        let value = uplink_mse(mac_precoders, &candidate, csi, robust)?;
        if value <= base {
            return Ok((candidate, mu, halvings));
        }
        if halvings >= settings.max_halvings {
            return Ok((nu.clone(), mu, halvings));
        }
        mu /= 2.0;
        halvings += 1;
    }
}

/// Random initial phases, uniform on `[0, 2 pi)`.
pub fn random_phases<R: Rng + ?Sized>(n: usize, rng: &mut R) -> IrsPhases {
    IrsPhases::new(CVec::from_fn(n, |_, _| {
        linalg::cis(rng.random_range(0.0..std::f64::consts::TAU))
    }))
}

/// Alternating MSE minimization in its default configuration: duality
/// precoder updates, unit-modulus projection, random seeded phase
/// initialization.
pub fn alternating_minimize<R: Rng + ?Sized>(
    csi: &CsiEstimate,
    cfg: &SystemConfig,
    settings: &PgSettings,
    rng: &mut R,
) -> Result<(TransceiverState, RunTrace)> {
    let nu = random_phases(cfg.num_irs_elements, rng);
    alternating_minimize_with(csi, cfg, settings, AltMinOptions::proposed(csi.noisy), nu)
}

/// Alternating MSE minimization from an explicit starting point with full
/// control over the projector, precoder update rule and robustness.
pub fn alternating_minimize_with(
    csi: &CsiEstimate,
    cfg: &SystemConfig,
    settings: &PgSettings,
    opts: AltMinOptions,
    initial_nu: IrsPhases,
) -> Result<(TransceiverState, RunTrace)> {
    settings.validate()?;
    let started = std::time::Instant::now();
    let l = cfg.num_subcarriers;
    let power = cfg.power_per_subcarrier();
    let robust = opts.robust;
    let mut nu = match (opts.optimize_phases, opts.projector) {
        // start inside the feasible set of the active projector
        (true, Projector::AmplitudeFree) if !initial_nu.is_empty() => {
            af_normalize(&initial_nu.coeffs)?
        }
        _ => initial_nu,
    };

    // initialization: MRT precoders, downlink filters, duality into the MAC
    let (mut precoders, _) = mrt_precoders(csi, &nu, cfg);
    let mut filters = mmse_downlink_filters(&precoders, csi, &nu, robust)?;
    let mut mac_precoders = vec![CMat::zeros(0, 0); cfg.num_users * l];
    let mut zeta = vec![0.0; l];
    let mut xi = vec![0.0; l];
    for ell in 0..l {
        let w_ell: Vec<CMat> = (0..cfg.num_users)
            .map(|k| filters[k * l + ell].clone())
            .collect();
        let (t_ell, z) = bc_to_mac(&w_ell, power, &csi.noise)?;
        zeta[ell] = z;
        for (k, t) in t_ell.into_iter().enumerate() {
            mac_precoders[k * l + ell] = t;
        }
    }
    let mut mac_filters = mmse_uplink_filters(&mac_precoders, csi, &nu, robust)?;

    let mut mu = settings.initial_step;
    let mut prev = uplink_mse(&mac_precoders, &nu, csi, robust)?;
    let mut rows = vec![TraceRow { iteration: 0, mse_ul: prev, step: mu, halvings: 0 }];
    let mut converged = false;
    let mut iterations = 0usize;

    for i in 1..=settings.max_iterations {
        iterations = i;
        if settings.reset_step_each_iteration {
            mu = settings.initial_step;
        }
        match opts.precoder_update {
            PrecoderUpdate::Duality => {
                for ell in 0..l {
                    let g_ell: Vec<CMat> = (0..cfg.num_users)
                        .map(|k| mac_filters[k * l + ell].clone())
                        .collect();
                    let (p_ell, x) = mac_to_bc(&g_ell, power)?;
                    xi[ell] = x;
                    for (k, p) in p_ell.into_iter().enumerate() {
                        precoders[k * l + ell] = p;
                    }
                }
            }
            PrecoderUpdate::Mrt => {
                let (p, _) = mrt_precoders(csi, &nu, cfg);
                precoders = p;
            }
        }
        filters = mmse_downlink_filters(&precoders, csi, &nu, robust)?;
        for ell in 0..l {
            let w_ell: Vec<CMat> = (0..cfg.num_users)
                .map(|k| filters[k * l + ell].clone())
                .collect();
            let (t_ell, z) = bc_to_mac(&w_ell, power, &csi.noise)?;
            zeta[ell] = z;
            for (k, t) in t_ell.into_iter().enumerate() {
                mac_precoders[k * l + ell] = t;
            }
        }
        let mut halvings = 0usize;
        if opts.optimize_phases {
            let (nu_new, mu_new, h) =
                pg_update(&nu, &mac_precoders, csi, mu, settings, opts.projector, robust)?;
            nu = nu_new;
            mu = mu_new;
            halvings = h;
        }
        // refresh the uplink filters at the moved phases: the next
        // iteration's transforms then carry filters that are optimal for the
        // channel they will be applied to, which keeps the recorded MSE
        // non-increasing
        mac_filters = mmse_uplink_filters(&mac_precoders, csi, &nu, robust)?;

        let current = uplink_mse(&mac_precoders, &nu, csi, robust)?;
        rows.push(TraceRow { iteration: i, mse_ul: current, step: mu, halvings });
        if prev - current < settings.mse_tolerance {
            converged = true;
            break;
        }
        prev = current;
    }

    let state = TransceiverState {
        num_users: cfg.num_users,
        num_subcarriers: l,
        precoders,
        filters,
        mac_precoders,
        mac_filters,
        xi,
        zeta,
        nu,
    };
    let trace = RunTrace { rows, iterations, converged, wall: started.elapsed() };
    Ok((state, trace))
}

/// Precoders and filters for a fixed phase vector: MRT initialization
/// followed by duality iterations until the MSE decrease drops below the
/// tolerance.
pub fn optimize_fixed_phases(
    csi: &CsiEstimate,
    cfg: &SystemConfig,
    settings: &PgSettings,
    nu: IrsPhases,
    robust: bool,
) -> Result<(TransceiverState, RunTrace)> {
    alternating_minimize_with(csi, cfg, settings, AltMinOptions::fixed_phases(robust), nu)
}

/// Single-shot MRT + MMSE design without any surface; the phase vector is
/// empty, so only the direct-link estimation error enters the robust terms.
pub fn design_without_irs(
    csi: &CsiEstimate,
    cfg: &SystemConfig,
    robust: bool,
) -> Result<(TransceiverState, RunTrace)> {
    let started = std::time::Instant::now();
    let nu = IrsPhases::disabled(0);
    let (precoders, _) = mrt_precoders(csi, &nu, cfg);
    let filters = mmse_downlink_filters(&precoders, csi, &nu, robust)?;
    let l = cfg.num_subcarriers;
    let power = cfg.power_per_subcarrier();
    let streams = cfg.streams_per_user;
    let mut mac_precoders = vec![CMat::zeros(0, 0); cfg.num_users * l];
    let mut zeta = vec![0.0; l];
    for ell in 0..l {
        let w_ell: Vec<CMat> = (0..cfg.num_users)
            .map(|k| filters[k * l + ell].clone())
            .collect();
        // a dead channel yields all-zero filters; keep the dual side zero
        // instead of failing the baseline
        if w_ell.iter().all(|w| w.norm() == 0.0) {
            for k in 0..cfg.num_users {
                mac_precoders[k * l + ell] = CMat::zeros(cfg.num_rx_antennas, streams);
            }
            continue;
        }
        let (t_ell, z) = bc_to_mac(&w_ell, power, &csi.noise)?;
        zeta[ell] = z;
        for (k, t) in t_ell.into_iter().enumerate() {
            mac_precoders[k * l + ell] = t;
        }
    }
    let mac_filters = mmse_uplink_filters(&mac_precoders, csi, &nu, robust)?;
    let mse = uplink_mse(&mac_precoders, &nu, csi, robust)?;
    let state = TransceiverState {
        num_users: cfg.num_users,
        num_subcarriers: l,
        precoders,
        filters,
        mac_precoders,
        mac_filters,
        xi: vec![0.0; l],
        zeta,
        nu,
    };
    let trace = RunTrace {
        rows: vec![TraceRow { iteration: 0, mse_ul: mse, step: 0.0, halvings: 0 }],
        iterations: 0,
        converged: true,
        wall: started.elapsed(),
    };
    Ok((state, trace))
}

/// Quantize the phases of a converged design and re-derive the precoders and
/// filters for the quantized surface.
pub fn requantize_and_redesign(
    state: &TransceiverState,
    bits: u32,
    csi: &CsiEstimate,
    cfg: &SystemConfig,
    settings: &PgSettings,
    robust: bool,
) -> Result<(TransceiverState, RunTrace)> {
    let quantized = quantize_phases(&state.nu, bits);
    optimize_fixed_phases(csi, cfg, settings, quantized, robust)
}
