//! Self-contained invariant suite behind the `validate` CLI subcommand.
//!
//! Each check exercises one cross-cutting property of the implementation on
//! freshly drawn random instances and reports pass/fail. The suite is meant
//! to run in seconds.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::config::{CsiMode, SystemConfig};
use crate::csi::{self, CsiEstimate};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};
use crate::model::{IrsPhases, NoiseModel};
use crate::optimizer::{self, PgSettings, Projector};
use crate::transceiver;

pub struct CheckOutcome {
    pub name: &'static str,
    pub result: Result<()>,
}

fn small_cfg(seed: u64) -> SystemConfig {
    let mut cfg = SystemConfig::desk();
    cfg.num_subcarriers = 4;
    cfg.num_delay_taps = 4;
    cfg.num_irs_elements = 6;
    cfg.csi_mode = CsiMode::Robust;
    cfg.rng_seed = seed;
    cfg.set_snr_db(10.0);
    cfg.mse_tolerance = cfg.default_mse_tolerance();
    cfg
}

fn unit_modulus(n: usize, rng: &mut ChaCha12Rng) -> IrsPhases {
    IrsPhases::new(CVec::from_fn(n, |_, _| {
        linalg::cis(rng.random_range(0.0..std::f64::consts::TAU))
    }))
}

fn random_csi(cfg: &SystemConfig, rng: &mut ChaCha12Rng) -> CsiEstimate {
    let (k, l, n) = (cfg.num_users, cfg.num_subcarriers, cfg.num_irs_elements);
    let (nr, nt) = (cfg.num_rx_antennas, cfg.num_tx_antennas);
    let direct: Vec<CMat> = (0..k * l)
        .map(|_| linalg::complex_gaussian(nr, nt, rng))
        .collect();
    let cascaded: Vec<CMat> = (0..k * l * n)
        .map(|_| linalg::complex_gaussian(nr, nt, rng))
        .collect();
    CsiEstimate::from_parts(cfg, NoiseModel::from_config(cfg), true, direct, cascaded)
        .expect("consistent parts")
}

fn random_precoders(cfg: &SystemConfig, rng: &mut ChaCha12Rng) -> Vec<CMat> {
    let (k_users, l) = (cfg.num_users, cfg.num_subcarriers);
    let mut out = vec![CMat::zeros(0, 0); k_users * l];
    for ell in 0..l {
        let raw: Vec<CMat> = (0..k_users)
            .map(|_| linalg::complex_gaussian(cfg.num_tx_antennas, cfg.streams_per_user, rng))
            .collect();
        let total: f64 = raw.iter().map(linalg::fro_sq).sum();
        let scale = (cfg.power_per_subcarrier() / total).sqrt();
        for (k, p) in raw.into_iter().enumerate() {
            out[k * l + ell] = p * Complex64::new(scale, 0.0);
        }
    }
    out
}

fn check(cond: bool, msg: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::degenerate(msg.into()))
    }
}

fn projector_feasibility() -> Result<()> {
    let mut rng = ChaCha12Rng::seed_from_u64(11);
    for _ in 0..200 {
        let raw = linalg::complex_gaussian(8, 1, &mut rng).column(0).into_owned();
        let p = optimizer::project_unit_modulus(&raw);
        check(p.is_unit_modulus(1e-12), "projection left the unit circle")?;
        let q = optimizer::quantize_phases(&p, 3);
        check(q.is_unit_modulus(1e-12), "quantizer left the unit circle")?;
        let af = optimizer::af_normalize(&raw)?;
        check(
            (af.norm_sq() - 8.0).abs() < 1e-9,
            "amplitude-free normalization missed the norm budget",
        )?;
    }
    Ok(())
}

fn gradient_finite_differences() -> Result<()> {
    let cfg = small_cfg(1);
    let mut rng = ChaCha12Rng::seed_from_u64(21);
    for _ in 0..5 {
        let csi = random_csi(&cfg, &mut rng);
        let nu = unit_modulus(cfg.num_irs_elements, &mut rng);
        let t = random_mac(&cfg, &mut rng);
        let grad = optimizer::mse_gradient_nu(&t, &nu, &csi, true)?;
        let h = 1e-6;
        for e in 0..nu.len() {
            let mut plus = nu.clone();
            let mut minus = nu.clone();
            plus.coeffs[e] += Complex64::new(h, 0.0);
            minus.coeffs[e] -= Complex64::new(h, 0.0);
            let d_re = (transceiver::uplink_mse(&t, &plus, &csi, true)?
                - transceiver::uplink_mse(&t, &minus, &csi, true)?)
                / (2.0 * h);
            let scale = d_re.abs().max(1e-9);
            check(
                (2.0 * grad[e].re - d_re).abs() / scale < 1e-5,
                format!("gradient component {e} disagrees with finite differences"),
            )?;
        }
    }
    Ok(())
}

fn random_mac(cfg: &SystemConfig, rng: &mut ChaCha12Rng) -> Vec<CMat> {
    let (k_users, l) = (cfg.num_users, cfg.num_subcarriers);
    let mut out = vec![CMat::zeros(0, 0); k_users * l];
    for ell in 0..l {
        let raw: Vec<CMat> = (0..k_users)
            .map(|_| linalg::complex_gaussian(cfg.num_rx_antennas, cfg.streams_per_user, rng))
            .collect();
        let total: f64 = raw.iter().map(linalg::fro_sq).sum();
        let scale = (cfg.power_per_subcarrier() / total).sqrt();
        for (k, t) in raw.into_iter().enumerate() {
            out[k * l + ell] = t * Complex64::new(scale, 0.0);
        }
    }
    out
}

fn duality_cycle_non_increase() -> Result<()> {
    let mut cfg = small_cfg(2);
    cfg.csi_mode = CsiMode::Perfect;
    let mut rng = ChaCha12Rng::seed_from_u64(31);
    for _ in 0..20 {
        let channels = crate::channel::gen_scenario(&cfg, &mut rng)?;
        let csi = CsiEstimate::perfect(&channels, &cfg);
        let nu = unit_modulus(cfg.num_irs_elements, &mut rng);
        let (p0, _) = transceiver::mrt_precoders(&csi, &nu, &cfg);
        let w0 = transceiver::mmse_downlink_filters(&p0, &csi, &nu, false)?;
        let power = cfg.power_per_subcarrier();
        for ell in 0..cfg.num_subcarriers {
            let mse0: f64 = (0..cfg.num_users)
                .map(|k| {
                    transceiver::downlink_mse(
                        k,
                        ell,
                        &p0,
                        &w0[k * cfg.num_subcarriers + ell],
                        &csi,
                        &nu,
                        false,
                    )
                })
                .sum();
            let w_ell: Vec<CMat> = (0..cfg.num_users)
                .map(|k| w0[k * cfg.num_subcarriers + ell].clone())
                .collect();
            let (t_ell, _) = transceiver::bc_to_mac(&w_ell, power, &csi.noise)?;
            let mut t_full = vec![CMat::zeros(0, 0); cfg.num_users * cfg.num_subcarriers];
            let mut p_full = p0.clone();
            for (k, t) in t_ell.iter().enumerate() {
                t_full[k * cfg.num_subcarriers + ell] = t.clone();
            }
            let g_ell = transceiver::mmse_uplink_filter(ell, &t_full, &csi, &nu, false)?;
            let (p_ell, _) = transceiver::mac_to_bc(&g_ell, power)?;
            for (k, p) in p_ell.into_iter().enumerate() {
                p_full[k * cfg.num_subcarriers + ell] = p;
            }
            let mse1: f64 = (0..cfg.num_users)
                .map(|k| {
                    let w = transceiver::mmse_downlink_filter(k, ell, &p_full, &csi, &nu, false)
                        .expect("filter");
                    transceiver::downlink_mse(k, ell, &p_full, &w, &csi, &nu, false)
                })
                .sum();
            check(
                mse1 <= mse0 + 1e-9,
                format!("duality cycle increased per-subcarrier MSE: {mse0} -> {mse1}"),
            )?;
        }
    }
    Ok(())
}

fn downlink_formula_cross_validation() -> Result<()> {
    let cfg = small_cfg(3);
    let mut rng = ChaCha12Rng::seed_from_u64(41);
    for _ in 0..20 {
        let csi = random_csi(&cfg, &mut rng);
        let nu = unit_modulus(cfg.num_irs_elements, &mut rng);
        let p = random_precoders(&cfg, &mut rng);
        for k in 0..cfg.num_users {
            let w = transceiver::mmse_downlink_filter(k, 0, &p, &csi, &nu, true)?;
            let general = transceiver::downlink_mse(k, 0, &p, &w, &csi, &nu, true);
            let closed = transceiver::downlink_mse_closed(k, 0, &p, &csi, &nu, true)?;
            check(
                (general - closed).abs() <= 1e-9 * closed.max(1.0),
                format!("downlink MSE forms disagree: {general} vs {closed}"),
            )?;
        }
    }
    Ok(())
}

fn duality_power_conservation() -> Result<()> {
    let cfg = small_cfg(4);
    let mut rng = ChaCha12Rng::seed_from_u64(51);
    let power = cfg.power_per_subcarrier();
    for _ in 0..20 {
        let g: Vec<CMat> = (0..cfg.num_users)
            .map(|_| linalg::complex_gaussian(cfg.streams_per_user, cfg.num_tx_antennas, &mut rng))
            .collect();
        let (p, _) = transceiver::mac_to_bc(&g, power)?;
        let total: f64 = p.iter().map(linalg::fro_sq).sum();
        check(
            (total - power).abs() <= 1e-10 * power,
            "downlink power after the transform missed the budget",
        )?;
    }
    Ok(())
}

fn ls_noiseless_recovery() -> Result<()> {
    let mut cfg = small_cfg(5);
    cfg.num_irs_elements = 3;
    let mut rng = ChaCha12Rng::seed_from_u64(61);
    let channels = crate::channel::gen_scenario(&cfg, &mut rng)?;
    let plan = csi::build_pilot_plan(&cfg);
    let est = csi::ls_estimate_noiseless(&channels, &plan, &cfg)?;
    let nu = unit_modulus(cfg.num_irs_elements, &mut rng);
    for k in 0..cfg.num_users {
        for ell in 0..cfg.num_subcarriers {
            check(
                linalg::rel_err(est.direct(k, ell), channels.direct(k, ell)) < 1e-9,
                "noiseless estimate of the direct channel is not exact",
            )?;
            let rebuilt = est.equivalent(k, ell, &nu);
            let truth = channels.equivalent(k, ell, &nu);
            check(
                linalg::rel_err(&rebuilt, &truth) < 1e-9,
                "cascaded unpacking does not reconstruct the equivalent channel",
            )?;
        }
    }
    Ok(())
}

fn scenario_determinism() -> Result<()> {
    let cfg = small_cfg(6);
    let a = crate::channel::gen_scenario(&cfg, &mut ChaCha12Rng::seed_from_u64(7))?;
    let b = crate::channel::gen_scenario(&cfg, &mut ChaCha12Rng::seed_from_u64(7))?;
    check(
        a.content_hash() == b.content_hash(),
        "scenario generation is not deterministic",
    )
}

fn trace_monotonicity() -> Result<()> {
    let cfg = small_cfg(8);
    let settings = PgSettings::from_config(&cfg);
    for seed in 0..5u64 {
        let mut rng = ChaCha12Rng::seed_from_u64(100 + seed);
        let channels = crate::channel::gen_scenario(&cfg, &mut rng)?;
        let csi = csi::sample_csi_statistical(&channels, &cfg, &mut rng);
        let (state, trace) = optimizer::alternating_minimize(&csi, &cfg, &settings, &mut rng)?;
        check(
            trace.max_increase() <= 1e-9,
            format!("trace increased by {}", trace.max_increase()),
        )?;
        check(state.nu.is_unit_modulus(1e-12), "phases left the unit circle")?;
        let budget = cfg.power_per_subcarrier() * (1.0 + 1e-9);
        for ell in 0..cfg.num_subcarriers {
            check(state.downlink_power(ell) <= budget, "downlink power violated")?;
        }
    }
    Ok(())
}

fn pg_descent_acceptance() -> Result<()> {
    let cfg = small_cfg(9);
    let settings = PgSettings::from_config(&cfg);
    let mut rng = ChaCha12Rng::seed_from_u64(71);
    for _ in 0..10 {
        let csi = random_csi(&cfg, &mut rng);
        let nu = unit_modulus(cfg.num_irs_elements, &mut rng);
        let t = random_mac(&cfg, &mut rng);
        let base = transceiver::uplink_mse(&t, &nu, &csi, true)?;
        let (out, _, _) = optimizer::pg_update(
            &nu,
            &t,
            &csi,
            settings.initial_step,
            &settings,
            Projector::UnitModulus,
            true,
        )?;
        let after = transceiver::uplink_mse(&t, &out, &csi, true)?;
        check(after <= base + 1e-12, "phase update increased the MSE")?;
    }
    Ok(())
}

/// Run every check; the caller renders the outcomes.
pub fn run_all() -> Vec<CheckOutcome> {
    macro_rules! outcome {
        ($name:literal, $f:expr) => {
            CheckOutcome { name: $name, result: $f }
        };
    }
    vec![
        outcome!("projector_feasibility", projector_feasibility()),
        outcome!("gradient_finite_differences", gradient_finite_differences()),
        outcome!("duality_cycle_non_increase", duality_cycle_non_increase()),
        outcome!(
            "downlink_formula_cross_validation",
            downlink_formula_cross_validation()
        ),
        outcome!("duality_power_conservation", duality_power_conservation()),
        outcome!("ls_noiseless_recovery", ls_noiseless_recovery()),
        outcome!("scenario_determinism", scenario_determinism()),
        outcome!("trace_monotonicity", trace_monotonicity()),
        outcome!("pg_descent_acceptance", pg_descent_acceptance()),
    ]
}
