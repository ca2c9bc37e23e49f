//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (run with `cargo test --test acceptance -- --nocapture`
//! to see them).

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use irsim_core::channel::gen_scenario;
use irsim_core::csi::{build_pilot_plan, ls_error_covariance, ls_estimate_full, ls_estimate_noiseless, CsiEstimate};
use irsim_core::experiment::{
    delta_r, mean_and_se, monte_carlo, Cell, ExperimentSpec, Method, MetricRow, RunOptions,
};
use irsim_core::linalg::{self, complex_gaussian, CMat, CVec};
use irsim_core::model::NoiseModel;
use irsim_core::optimizer::{alternating_minimize, mse_gradient_nu, PgSettings};
use irsim_core::transceiver::{
    bc_to_mac, downlink_mse, downlink_mse_closed, mac_to_bc, mmse_downlink_filter,
    mmse_downlink_filters, mmse_uplink_filter, mrt_precoders, uplink_mse,
};
use irsim_core::{CsiMode, IrsPhases, SystemConfig};

fn unit_modulus(n: usize, rng: &mut ChaCha12Rng) -> IrsPhases {
    IrsPhases::new(CVec::from_fn(n, |_, _| {
        linalg::cis(rng.random_range(0.0..std::f64::consts::TAU))
    }))
}

fn random_csi(cfg: &SystemConfig, rng: &mut ChaCha12Rng) -> CsiEstimate {
    let (k, l, n) = (cfg.num_users, cfg.num_subcarriers, cfg.num_irs_elements);
    let (nr, nt) = (cfg.num_rx_antennas, cfg.num_tx_antennas);
    let direct: Vec<CMat> = (0..k * l).map(|_| complex_gaussian(nr, nt, rng)).collect();
    let cascaded: Vec<CMat> = (0..k * l * n).map(|_| complex_gaussian(nr, nt, rng)).collect();
    CsiEstimate::from_parts(cfg, NoiseModel::from_config(cfg), true, direct, cascaded).unwrap()
}

fn random_precoders(cfg: &SystemConfig, rows: usize, rng: &mut ChaCha12Rng) -> Vec<CMat> {
    let (k_users, l) = (cfg.num_users, cfg.num_subcarriers);
    let mut out = vec![CMat::zeros(0, 0); k_users * l];
    for ell in 0..l {
        let raw: Vec<CMat> = (0..k_users)
            .map(|_| complex_gaussian(rows, cfg.streams_per_user, rng))
            .collect();
        let total: f64 = raw.iter().map(linalg::fro_sq).sum();
        let scale = (cfg.power_per_subcarrier() / total).sqrt();
        for (k, p) in raw.into_iter().enumerate() {
            out[k * l + ell] = p * Complex64::new(scale, 0.0);
        }
    }
    out
}

/// Paired mean difference of sum-rates (a - b) with its standard error.
fn paired_gap(rows: &[MetricRow], a: Method, b: Method, cell: &Cell) -> (f64, f64, usize) {
    let pick = |method: Method| -> std::collections::HashMap<usize, f64> {
        rows.iter()
            .filter(|r| {
                r.method == method
                    && r.snr_db == cell.snr_db
                    && r.n_irs == cell.n_irs
                    && r.n_path_i == cell.n_path_i
                    && r.bits == cell.bits
            })
            .map(|r| (r.realization, r.sum_rate))
            .collect()
    };
    let left = pick(a);
    let right = pick(b);
    let mut diffs: Vec<f64> = Vec::new();
    for (real, rate) in &left {
        if let Some(other) = right.get(real) {
            diffs.push(rate - other);
        }
    }
    let (mean, se) = mean_and_se(&diffs);
    (mean, se, diffs.len())
}

fn desk_spec(methods: Vec<Method>, realizations: usize) -> ExperimentSpec {
    let base = SystemConfig::desk();
    ExperimentSpec {
        snr_db_list: vec![base.snr_db],
        n_irs_list: vec![base.num_irs_elements],
        n_path_i_list: vec![base.paths_irs_user],
        bits_list: vec![0],
        methods,
        realizations,
        base,
    }
}

fn run_spec(spec: &ExperimentSpec) -> Vec<MetricRow> {
    let dir = tempfile::tempdir().unwrap();
    let opts = RunOptions {
        out_dir: dir.path().to_path_buf(),
        deterministic: true,
        threads: None,
    };
    monte_carlo(spec, &opts).unwrap().rows
}

#[test]
fn criterion_01_gradient_matches_finite_differences() {
    let started = Instant::now();
    let mut cfg = SystemConfig::desk();
    cfg.num_subcarriers = 4;
    cfg.num_delay_taps = 4;
    cfg.num_irs_elements = 6;
    cfg.csi_mode = CsiMode::Robust;
    cfg.set_snr_db(10.0);
    let mut rng = ChaCha12Rng::seed_from_u64(101);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for instance in 0..20 {
        let csi = random_csi(&cfg, &mut rng);
        let nu = unit_modulus(cfg.num_irs_elements, &mut rng);
        let t = random_precoders(&cfg, cfg.num_rx_antennas, &mut rng);
        let grad = mse_gradient_nu(&t, &nu, &csi, true).unwrap();
        for e in 0..nu.len() {
            let eval = |delta: Complex64| {
                let mut moved = nu.clone();
                moved.coeffs[e] += delta;
                uplink_mse(&t, &moved, &csi, true).unwrap()
            };
            let d_re = (eval(Complex64::new(h, 0.0)) - eval(Complex64::new(-h, 0.0))) / (2.0 * h);
            let d_im = (eval(Complex64::new(0.0, h)) - eval(Complex64::new(0.0, -h))) / (2.0 * h);
            // d/dRe = 2 Re(grad_e), d/dIm = -2 Im(grad_e)
            let scale = d_re.abs().max(d_im.abs()).max(1e-8);
            let err_re = (2.0 * grad[e].re - d_re).abs() / scale;
            let err_im = (-2.0 * grad[e].im - d_im).abs() / scale;
            worst = worst.max(err_re).max(err_im);
            assert!(
                err_re < 1e-5 && err_im < 1e-5,
                "FAIL criterion 1: instance {instance} element {e} rel err ({err_re:.2e}, {err_im:.2e})"
            );
        }
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 10.0,
        "FAIL criterion 1: runtime {elapsed:?} exceeds 10 s"
    );
    println!(
        "PASS criterion 1 (gradient oracle): 20 instances, worst rel err {worst:.2e}, {elapsed:?}"
    );
}

#[test]
fn criterion_02_monotone_descent_and_convergence() {
    let started = Instant::now();
    let cfg = SystemConfig::desk();
    assert_eq!(
        (cfg.num_users, cfg.num_rx_antennas, cfg.num_tx_antennas),
        (2, 2, 4)
    );
    assert_eq!((cfg.num_subcarriers, cfg.num_irs_elements), (8, 9));
    assert!((cfg.snr_db - 10.0).abs() < 1e-12);
    let settings = PgSettings::from_config(&cfg);
    let mut iterations = Vec::new();
    let mut worst_increase = f64::NEG_INFINITY;
    for seed in 0..50u64 {
        let mut rng = ChaCha12Rng::seed_from_u64(7000 + seed);
        let channels = gen_scenario(&cfg, &mut rng).unwrap();
        let csi = CsiEstimate::perfect(&channels, &cfg);
        let (_, trace) = alternating_minimize(&csi, &cfg, &settings, &mut rng).unwrap();
        worst_increase = worst_increase.max(trace.max_increase());
        assert!(
            trace.max_increase() <= 1e-9,
            "FAIL criterion 2: seed {seed} trace increased by {}",
            trace.max_increase()
        );
        assert!(
            trace.converged,
            "FAIL criterion 2: seed {seed} did not converge within {} iterations",
            cfg.max_iterations
        );
        iterations.push(trace.iterations);
    }
    iterations.sort_unstable();
    let median = iterations[iterations.len() / 2];
    assert!(
        median <= 40,
        "FAIL criterion 2: median convergence at {median} iterations (> 40)"
    );
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 120.0,
        "FAIL criterion 2: runtime {elapsed:?} exceeds 2 min"
    );
    println!(
        "PASS criterion 2 (monotone descent): 50 runs, worst increase {worst_increase:.2e}, median {median} iterations, {elapsed:?}"
    );
}

#[test]
fn criterion_03_downlink_mse_formula_cross_validation() {
    let mut cfg = SystemConfig::desk();
    cfg.num_subcarriers = 2;
    cfg.num_delay_taps = 2;
    cfg.num_irs_elements = 5;
    cfg.csi_mode = CsiMode::Robust;
    cfg.set_snr_db(10.0);
    let mut rng = ChaCha12Rng::seed_from_u64(303);
    let mut worst: f64 = 0.0;
    for instance in 0..100 {
        let csi = random_csi(&cfg, &mut rng);
        let nu = unit_modulus(cfg.num_irs_elements, &mut rng);
        let p = random_precoders(&cfg, cfg.num_tx_antennas, &mut rng);
        for k in 0..cfg.num_users {
            for ell in 0..cfg.num_subcarriers {
                let w = mmse_downlink_filter(k, ell, &p, &csi, &nu, true).unwrap();
                let general = downlink_mse(k, ell, &p, &w, &csi, &nu, true);
                let closed = downlink_mse_closed(k, ell, &p, &csi, &nu, true).unwrap();
                let rel = (general - closed).abs() / closed.abs().max(1e-12);
                worst = worst.max(rel);
                assert!(
                    rel <= 1e-9,
                    "FAIL criterion 3: instance {instance} user {k} subcarrier {ell}: {general} vs {closed}"
                );
            }
        }
    }
    println!("PASS criterion 3 (robust MSE expansion = compact form): 100 instances, worst rel {worst:.2e}");
}

#[test]
fn criterion_04_duality_cycle_never_increases_sum_mse() {
    let mut cfg = SystemConfig::desk();
    cfg.num_subcarriers = 2;
    cfg.num_delay_taps = 2;
    cfg.num_irs_elements = 5;
    cfg.csi_mode = CsiMode::Perfect;
    cfg.set_snr_db(10.0);
    let power = cfg.power_per_subcarrier();
    let l = cfg.num_subcarriers;
    let mut rng = ChaCha12Rng::seed_from_u64(404);
    let mut worst: f64 = f64::NEG_INFINITY;
    for instance in 0..100 {
        let channels = gen_scenario(&cfg, &mut rng).unwrap();
        let csi = CsiEstimate::perfect(&channels, &cfg);
        let nu = unit_modulus(cfg.num_irs_elements, &mut rng);
        let (p0, _) = mrt_precoders(&csi, &nu, &cfg);
        let w0 = mmse_downlink_filters(&p0, &csi, &nu, false).unwrap();
        for ell in 0..l {
            let mse0: f64 = (0..cfg.num_users)
                .map(|k| downlink_mse(k, ell, &p0, &w0[k * l + ell], &csi, &nu, false))
                .sum();
            // BC -> MAC -> uplink MMSE -> MAC -> BC -> downlink MMSE
            let w_ell: Vec<CMat> = (0..cfg.num_users).map(|k| w0[k * l + ell].clone()).collect();
            let (t_ell, _) = bc_to_mac(&w_ell, power, &csi.noise).unwrap();
            let mut t_full = vec![CMat::zeros(0, 0); cfg.num_users * l];
            for (k, t) in t_ell.into_iter().enumerate() {
                t_full[k * l + ell] = t;
            }
            let g_ell = mmse_uplink_filter(ell, &t_full, &csi, &nu, false).unwrap();
            let (p_ell, _) = mac_to_bc(&g_ell, power).unwrap();
            let mut p1 = p0.clone();
            for (k, p) in p_ell.into_iter().enumerate() {
                p1[k * l + ell] = p;
            }
            let mse1: f64 = (0..cfg.num_users)
                .map(|k| {
                    let w = mmse_downlink_filter(k, ell, &p1, &csi, &nu, false).unwrap();
                    downlink_mse(k, ell, &p1, &w, &csi, &nu, false)
                })
                .sum();
            worst = worst.max(mse1 - mse0);
            assert!(
                mse1 <= mse0 + 1e-9,
                "FAIL criterion 4: instance {instance} subcarrier {ell}: {mse0} -> {mse1}"
            );
        }
    }
    println!("PASS criterion 4 (duality cycle): 100 instances, worst change {worst:.2e}");
}

#[test]
fn criterion_05_desk_scale_method_ordering() {
    let started = Instant::now();
    let spec = desk_spec(
        vec![
            Method::AfOps,
            Method::ProposedPg,
            Method::RIrsOps,
            Method::NoIrsMrt,
        ],
        200,
    );
    let rows = run_spec(&spec);
    let cell = spec.cells()[0];
    let pairs = [
        (Method::AfOps, Method::ProposedPg),
        (Method::ProposedPg, Method::RIrsOps),
        (Method::RIrsOps, Method::NoIrsMrt),
    ];
    let mut report = String::new();
    for (a, b) in pairs {
        let (gap, se, n) = paired_gap(&rows, a, b, &cell);
        assert!(
            gap > 2.0 * se,
            "FAIL criterion 5: {} - {} gap {gap:.4} not positive at 2 SE ({se:.4}, n={n})",
            a.name(),
            b.name()
        );
        report.push_str(&format!("{}>{} by {gap:.3}+-{se:.3}; ", a.name(), b.name()));
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 900.0,
        "FAIL criterion 5: runtime {elapsed:?} exceeds 15 min"
    );
    println!("PASS criterion 5 (method ordering at 2 SE): {report}{elapsed:?}");
}

#[test]
fn criterion_06_robust_design_beats_non_robust_at_low_snr() {
    let mut base = SystemConfig::desk();
    base.csi_mode = CsiMode::Robust;
    let spec = ExperimentSpec {
        snr_db_list: vec![-5.0, 0.0],
        n_irs_list: vec![base.num_irs_elements],
        n_path_i_list: vec![base.paths_irs_user],
        bits_list: vec![0],
        methods: vec![Method::ProposedPg, Method::ProposedNonrobust],
        realizations: 200,
        base,
    };
    let rows = run_spec(&spec);
    let mut report = String::new();
    for cell in spec.cells() {
        let (gap, se, n) = paired_gap(&rows, Method::ProposedPg, Method::ProposedNonrobust, &cell);
        assert!(
            gap > 2.0 * se,
            "FAIL criterion 6: robust gain at {} dB is {gap:.4} (se {se:.4}, n={n})",
            cell.snr_db
        );
        report.push_str(&format!("{} dB: +{gap:.3}+-{se:.3}; ", cell.snr_db));
    }
    println!("PASS criterion 6 (robust >= non-robust at 2 SE): {report}");
}

#[test]
fn criterion_07_surface_size_trend() {
    let mut base = SystemConfig::desk();
    base.set_snr_db(5.0);
    let spec = ExperimentSpec {
        snr_db_list: vec![5.0],
        n_irs_list: vec![9, 16, 25, 36],
        n_path_i_list: vec![base.paths_irs_user],
        bits_list: vec![0],
        methods: vec![Method::ProposedPg, Method::RIrsOps],
        realizations: 100,
        base,
    };
    let rows = run_spec(&spec);
    let mut gains = Vec::new();
    for cell in spec.cells() {
        gains.push((cell.n_irs, delta_r(&rows, &cell).unwrap()));
    }
    for w in gains.windows(2) {
        assert!(
            w[1].1 > w[0].1,
            "FAIL criterion 7: gain not increasing from N={} ({:.4}) to N={} ({:.4})",
            w[0].0,
            w[0].1,
            w[1].0,
            w[1].1
        );
    }
    let report: Vec<String> = gains.iter().map(|(n, g)| format!("N={n}: {g:.3}")).collect();
    println!(
        "PASS criterion 7 (phase-optimization gain grows with surface size): {}",
        report.join(", ")
    );
}

#[test]
fn criterion_08_quantization_ordering() {
    let base = SystemConfig::desk();
    let spec = ExperimentSpec {
        snr_db_list: vec![base.snr_db],
        n_irs_list: vec![base.num_irs_elements],
        n_path_i_list: vec![base.paths_irs_user],
        bits_list: vec![0, 3, 2],
        methods: vec![Method::ProposedPg],
        realizations: 100,
        base,
    };
    let rows = run_spec(&spec);
    let mean_for = |bits: u32| -> f64 {
        let rates: Vec<f64> = rows
            .iter()
            .filter(|r| r.bits == bits)
            .map(|r| r.sum_rate)
            .collect();
        assert_eq!(rates.len(), 100);
        rates.iter().sum::<f64>() / rates.len() as f64
    };
    let continuous = mean_for(0);
    let three_bit = mean_for(3);
    let two_bit = mean_for(2);
    assert!(
        continuous >= three_bit && three_bit >= two_bit,
        "FAIL criterion 8: ordering violated ({continuous:.4}, {three_bit:.4}, {two_bit:.4})"
    );
    let loss3 = continuous - three_bit;
    let loss2 = continuous - two_bit;
    assert!(
        loss3 < loss2,
        "FAIL criterion 8: 3-bit loss {loss3:.4} not smaller than 2-bit loss {loss2:.4}"
    );
    println!(
        "PASS criterion 8 (quantization ordering): continuous {continuous:.3} >= 3-bit {three_bit:.3} >= 2-bit {two_bit:.3}"
    );
}

#[test]
fn criterion_09_ls_estimator_validation() {
    let mut cfg = SystemConfig::desk();
    cfg.num_tx_antennas = 2;
    cfg.num_rx_antennas = 2;
    cfg.num_users = 1;
    cfg.streams_per_user = 1;
    cfg.num_subcarriers = 4;
    cfg.num_delay_taps = 4;
    cfg.num_irs_elements = 3;
    cfg.csi_mode = CsiMode::Robust;
    cfg.set_snr_db(10.0);
    let mut rng = ChaCha12Rng::seed_from_u64(909);
    let channels = gen_scenario(&cfg, &mut rng).unwrap();
    let plan = build_pilot_plan(&cfg);

    // noiseless loop recovers the stacked channels
    let exact = ls_estimate_noiseless(&channels, &plan, &cfg).unwrap();
    for ell in 0..cfg.num_subcarriers {
        assert!(
            linalg::rel_err(exact.direct(0, ell), channels.direct(0, ell)) < 1e-9,
            "FAIL criterion 9: noiseless recovery off at subcarrier {ell}"
        );
        for n in 0..cfg.num_irs_elements {
            let truth = channels.cascaded_term(0, ell, n);
            assert!(
                linalg::rel_err(exact.cascaded(0, ell, n), &truth) < 1e-9,
                "FAIL criterion 9: noiseless cascaded recovery off at ({ell}, {n})"
            );
        }
    }

    // noisy empirical covariance vs (L/P_T) I (x) C_eta over 2000 trials,
    // pooling the mutually independent errors of every estimated matrix
    // (direct and cascaded, all subcarriers) since the model covers them all
    let noise = NoiseModel::from_config(&cfg);
    let trials = 2000;
    let nr = cfg.num_rx_antennas;
    let dim = nr * cfg.num_tx_antennas;
    let mut cov = CMat::zeros(dim, dim);
    let mut samples = 0usize;
    for _ in 0..trials {
        let est = ls_estimate_full(&channels, &plan, &noise, &cfg, &mut rng).unwrap();
        let mut errors: Vec<CMat> = Vec::new();
        for ell in 0..cfg.num_subcarriers {
            errors.push(est.direct(0, ell) - channels.direct(0, ell));
            for n in 0..cfg.num_irs_elements {
                errors.push(est.cascaded(0, ell, n) - channels.cascaded_term(0, ell, n));
            }
        }
        samples += errors.len();
        for err in errors {
            let e = CVec::from_fn(dim, |i, _| err[(i % nr, i / nr)]);
            for i in 0..dim {
                for j in 0..dim {
                    cov[(i, j)] += e[i] * e[j].conj();
                }
            }
        }
    }
    cov /= Complex64::new(samples as f64, 0.0);
    let model = ls_error_covariance(&cfg).matrix(0);
    let scale = model
        .diagonal()
        .iter()
        .map(|z| z.re)
        .fold(0.0f64, f64::max);
    let max_dev = (&cov - &model).iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    assert!(
        max_dev < 0.05 * scale,
        "FAIL criterion 9: covariance deviation {max_dev:.4e} vs scale {scale:.4e}"
    );
    println!(
        "PASS criterion 9 (LS estimator): exact noiseless recovery, covariance deviation {:.1}% of scale",
        100.0 * max_dev / scale
    );
}

#[test]
fn criterion_10_deterministic_runs_are_byte_identical() {
    let spec = desk_spec(vec![Method::ProposedPg, Method::NoIrsMrt], 3);
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    for (dir, threads) in [(&dir_a, Some(1)), (&dir_b, Some(4))] {
        let opts = RunOptions {
            out_dir: dir.path().to_path_buf(),
            deterministic: true,
            threads,
        };
        monte_carlo(&spec, &opts).unwrap();
    }
    for name in ["results.csv", "summary.csv"] {
        let a = std::fs::read(dir_a.path().join(name)).unwrap();
        let b = std::fs::read(dir_b.path().join(name)).unwrap();
        assert_eq!(
            a, b,
            "FAIL criterion 10: {name} differs between deterministic reruns"
        );
    }
    println!("PASS criterion 10 (determinism): results.csv and summary.csv byte-identical across reruns and thread counts");
}
