//! Pilot-based least-squares channel estimation and the statistical error
//! model consumed by the robust transceiver design.
//!
//! A passive surface cannot separate its two hops, so the cascaded channel is
//! estimated per element as aggregated rank-one products. The estimation
//! error of every estimated matrix column is zero-mean complex Gaussian with
//! covariance `error_scale * C_eta`, where `error_scale = L / P_T`. The fast
//! path ([`sample_csi_statistical`]) draws errors directly from that model;
//! the full pilot loop ([`ls_estimate_full`]) exists to validate it.

use num_complex::Complex64;
use rand::Rng;

use crate::config::{CsiMode, SystemConfig};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};
use crate::model::{ChannelSet, IrsPhases, NoiseModel};

/// Pilot matrix and phase-allocation matrix used during estimation.
#[derive(Debug, Clone)]
pub struct PilotPlan {
    /// Pilot block, `N_p x N_t` with `N_p = N_t`, satisfying
    /// `X^* X = (P_T / L) I`.
    pub x: CMat,
    /// Phase allocations, `(N+1) x (N+1)` with unit-magnitude entries and
    /// `V V^* = (N+1) I`. Column `c` is the augmented phase vector
    /// `[1, nu_c^T]^T` of allocation `c`.
    pub v: CMat,
}

/// DFT matrix with unit-magnitude entries, `n x n`.
fn dft(n: usize) -> CMat {
    CMat::from_fn(n, n, |p, q| {
        linalg::cis(-std::f64::consts::TAU * (p * q) as f64 / n as f64)
    })
}

/// Build the pilot plan: a power-scaled DFT pilot block and a DFT phase
/// allocation matrix.
pub fn build_pilot_plan(cfg: &SystemConfig) -> PilotPlan {
    let nt = cfg.num_tx_antennas;
    let scale = Complex64::new((cfg.power_per_subcarrier() / nt as f64).sqrt(), 0.0);
    // unitary DFT scaled so that x^* x = (P_T/L) I
    let x = dft(nt) * scale;
    let v = dft(cfg.num_irs_elements + 1);
    PilotPlan { x, v }
}

/// Channel estimates for every user, subcarrier and surface element.
#[derive(Debug, Clone)]
pub struct CsiEstimate {
    pub num_users: usize,
    pub num_subcarriers: usize,
    pub num_irs_elements: usize,
    /// Scale of the per-column error covariance, `L / P_T`.
    pub error_scale: f64,
    /// Whether the estimates actually contain noise. Perfect-CSI estimates
    /// keep `error_scale` for reference but are exact.
    pub noisy: bool,
    pub noise: NoiseModel,
    /// Direct estimates, `N_r x N_t`, indexed `k * L + ell`.
    direct: Vec<CMat>,
    /// Per-element cascaded estimates, `N_r x N_t`,
    /// indexed `(k * L + ell) * N + n`.
    cascaded: Vec<CMat>,
    /// Users stacked vertically: direct part, `N_r K x N_t`, indexed `ell`.
    stacked_direct: Vec<CMat>,
    /// Users stacked vertically: cascaded parts, indexed `ell * N + n`.
    stacked_cascaded: Vec<CMat>,
}

impl CsiEstimate {
    fn build(
        cfg: &SystemConfig,
        noise: NoiseModel,
        noisy: bool,
        direct: Vec<CMat>,
        cascaded: Vec<CMat>,
    ) -> Self {
        let (k, l, n) = (cfg.num_users, cfg.num_subcarriers, cfg.num_irs_elements);
        debug_assert_eq!(direct.len(), k * l);
        debug_assert_eq!(cascaded.len(), k * l * n);
        let nr = cfg.num_rx_antennas;
        let nt = cfg.num_tx_antennas;
        let mut stacked_direct = Vec::with_capacity(l);
        let mut stacked_cascaded = Vec::with_capacity(l * n);
        for ell in 0..l {
            let mut d = CMat::zeros(nr * k, nt);
            for user in 0..k {
                d.rows_mut(user * nr, nr)
                    .copy_from(&direct[user * l + ell]);
            }
            stacked_direct.push(d);
            for elem in 0..n {
                let mut c = CMat::zeros(nr * k, nt);
                for user in 0..k {
                    c.rows_mut(user * nr, nr)
                        .copy_from(&cascaded[(user * l + ell) * n + elem]);
                }
                stacked_cascaded.push(c);
            }
        }
        CsiEstimate {
            num_users: k,
            num_subcarriers: l,
            num_irs_elements: n,
            error_scale: cfg.error_scale(),
            noisy,
            noise,
            direct,
            cascaded,
            stacked_direct,
            stacked_cascaded,
        }
    }

    /// Assemble an estimate container from explicit matrices, for fixtures
    /// and synthetic instances. `direct` is indexed `k * L + ell` and
    /// `cascaded` is indexed `(k * L + ell) * N + n`.
    pub fn from_parts(
        cfg: &SystemConfig,
        noise: NoiseModel,
        noisy: bool,
        direct: Vec<CMat>,
        cascaded: Vec<CMat>,
    ) -> Result<Self> {
        let (k, l, n) = (cfg.num_users, cfg.num_subcarriers, cfg.num_irs_elements);
        if direct.len() != k * l || cascaded.len() != k * l * n {
            return Err(Error::config("estimate parts have inconsistent cardinality"));
        }
        Ok(Self::build(cfg, noise, noisy, direct, cascaded))
    }

    /// Exact estimates equal to the true channels.
    pub fn perfect(channels: &ChannelSet, cfg: &SystemConfig) -> Self {
        let (k, l, n) = (cfg.num_users, cfg.num_subcarriers, cfg.num_irs_elements);
        let mut direct = Vec::with_capacity(k * l);
        let mut cascaded = Vec::with_capacity(k * l * n);
        for user in 0..k {
            for ell in 0..l {
                direct.push(channels.direct(user, ell).clone());
                for elem in 0..n {
                    cascaded.push(channels.cascaded_term(user, ell, elem));
                }
            }
        }
        Self::build(cfg, NoiseModel::from_config(cfg), false, direct, cascaded)
    }

    #[inline]
    pub fn direct(&self, k: usize, ell: usize) -> &CMat {
        &self.direct[k * self.num_subcarriers + ell]
    }

    #[inline]
    pub fn cascaded(&self, k: usize, ell: usize, n: usize) -> &CMat {
        &self.cascaded[(k * self.num_subcarriers + ell) * self.num_irs_elements + n]
    }

    /// Direct part with all users stacked vertically, `N_r K x N_t`.
    #[inline]
    pub fn stacked_direct(&self, ell: usize) -> &CMat {
        &self.stacked_direct[ell]
    }

    /// Cascaded part `n` with all users stacked vertically.
    #[inline]
    pub fn stacked_cascaded(&self, ell: usize, n: usize) -> &CMat {
        &self.stacked_cascaded[ell * self.num_irs_elements + n]
    }

    /// Estimated equivalent channel of user `k` at subcarrier `ell` for the
    /// given phases.
    pub fn equivalent(&self, k: usize, ell: usize, nu: &IrsPhases) -> CMat {
        let mut h = self.direct(k, ell).clone();
        for n in 0..nu.len() {
            let w = nu.coeffs[n];
            h.zip_apply(self.cascaded(k, ell, n), |o, t| *o += w * t);
        }
        h
    }

    /// Stacked estimated equivalent channel at subcarrier `ell`.
    pub fn stacked_equivalent(&self, ell: usize, nu: &IrsPhases) -> CMat {
        let mut h = self.stacked_direct(ell).clone();
        for n in 0..nu.len() {
            let w = nu.coeffs[n];
            h.zip_apply(self.stacked_cascaded(ell, n), |o, t| *o += w * t);
        }
        h
    }

    pub fn content_hash(&self) -> u64 {
        let mut h = linalg::FNV_OFFSET;
        for m in self.direct.iter().chain(&self.cascaded) {
            linalg::content_hash_matrix(&mut h, m);
        }
        h
    }
}

/// Covariance descriptor of the least-squares estimation error: each
/// estimated column has covariance `error_scale * C_eta,k`, i.e. the full
/// matrix error covariance is `error_scale * I_{N_t} (x) C_eta,k`.
#[derive(Debug, Clone)]
pub struct LsErrorCovariance {
    pub error_scale: f64,
    pub noise: NoiseModel,
    pub num_tx_antennas: usize,
}

impl LsErrorCovariance {
    /// Materialize the Kronecker form for user `k`.
    pub fn matrix(&self, k: usize) -> CMat {
        let c = self.noise.cov(k);
        let nr = c.nrows();
        let nt = self.num_tx_antennas;
        let mut out = CMat::zeros(nr * nt, nr * nt);
        for b in 0..nt {
            for i in 0..nr {
                for j in 0..nr {
                    out[(b * nr + i, b * nr + j)] = c[(i, j)] * self.error_scale;
                }
            }
        }
        out
    }
}

/// Simplified least-squares error covariance, `(L/P_T) I (x) C_eta,k`.
pub fn ls_error_covariance(cfg: &SystemConfig) -> LsErrorCovariance {
    LsErrorCovariance {
        error_scale: cfg.error_scale(),
        noise: NoiseModel::from_config(cfg),
        num_tx_antennas: cfg.num_tx_antennas,
    }
}

/// Column-major vectorization.
fn vec_of(m: &CMat) -> CVec {
    CVec::from_fn(m.nrows() * m.ncols(), |i, _| m[(i % m.nrows(), i / m.nrows())])
}

fn unvec(v: &CVec, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |i, j| v[j * rows + i])
}

/// Apply `(A (x) I_{N_r})` to each column of `m`, using
/// `(A (x) I) vec(M) = vec(M A^T)`.
fn kron_apply(a: &CMat, m: &CMat, nr: usize) -> CMat {
    let cols_in = a.ncols();
    let cols_out = a.nrows();
    let mut out = CMat::zeros(nr * cols_out, m.ncols());
    let a_t = a.transpose();
    for c in 0..m.ncols() {
        let col = m.column(c).into_owned();
        let mat = unvec(&col, nr, cols_in);
        let mapped = &mat * &a_t;
        out.column_mut(c).copy_from(&vec_of(&mapped));
    }
    out
}

/// Simulate the full pilot loop and recover estimates by least squares.
///
/// Receives `Y = (X (x) I) H V + noise` per user and subcarrier and inverts
/// it with the scaled adjoints of the plan matrices. The per-allocation
/// training noise is drawn with covariance `(N+1) C_eta,k` per channel use so
/// that the recovered per-column error covariance equals the
/// `error_scale * C_eta,k` model the robust design assumes.
pub fn ls_estimate_full<R: Rng + ?Sized>(
    channels: &ChannelSet,
    plan: &PilotPlan,
    noise: &NoiseModel,
    cfg: &SystemConfig,
    rng: &mut R,
) -> Result<CsiEstimate> {
    ls_estimate_impl(channels, plan, Some((noise, rng)), cfg)
}

/// The pilot loop with the noise turned off; recovers the stacked channels
/// exactly and is used for reconstruction checks.
pub fn ls_estimate_noiseless(
    channels: &ChannelSet,
    plan: &PilotPlan,
    cfg: &SystemConfig,
) -> Result<CsiEstimate> {
    ls_estimate_impl::<rand_chacha::ChaCha12Rng>(channels, plan, None, cfg)
}

fn ls_estimate_impl<R: Rng + ?Sized>(
    channels: &ChannelSet,
    plan: &PilotPlan,
    mut noise: Option<(&NoiseModel, &mut R)>,
    cfg: &SystemConfig,
) -> Result<CsiEstimate> {
    let (k_users, l, n) = (cfg.num_users, cfg.num_subcarriers, cfg.num_irs_elements);
    let nr = cfg.num_rx_antennas;
    let nt = cfg.num_tx_antennas;
    let n_alloc = n + 1;
    if plan.x.nrows() != nt || plan.v.nrows() != n_alloc {
        return Err(Error::config("pilot plan does not match the configuration"));
    }
    // scaled adjoints are exact pseudoinverses for the constructed plans
    let x_gram = plan.x.adjoint() * &plan.x;
    let v_gram = &plan.v * plan.v.adjoint();
    let x_scale = x_gram[(0, 0)].re;
    let v_scale = v_gram[(0, 0)].re;
    if linalg::rel_err(&x_gram, &(linalg::eye(nt) * Complex64::new(x_scale, 0.0))) > 1e-10
        || linalg::rel_err(&v_gram, &(linalg::eye(n_alloc) * Complex64::new(v_scale, 0.0))) > 1e-10
    {
        return Err(Error::config("pilot plan matrices are not weighted unitary"));
    }
    let x_pinv = plan.x.adjoint() / Complex64::new(x_scale, 0.0);
    let v_pinv = plan.v.adjoint() / Complex64::new(v_scale, 0.0);

    let mut direct = Vec::with_capacity(k_users * l);
    let mut cascaded = Vec::with_capacity(k_users * l * n);
    for k in 0..k_users {
        for ell in 0..l {
            // stacked channel: [vec(H_B) | vec(rank-one cascaded terms)]
            let mut h_stack = CMat::zeros(nr * nt, n_alloc);
            h_stack
                .column_mut(0)
                .copy_from(&vec_of(channels.direct(k, ell)));
            for elem in 0..n {
                let term = channels.cascaded_term(k, ell, elem);
                h_stack.column_mut(elem + 1).copy_from(&vec_of(&term));
            }
            let mut y = kron_apply(&plan.x, &h_stack, nr) * &plan.v;
            if let Some((noise_model, rng)) = noise.as_mut() {
                let amp = (n_alloc as f64).sqrt();
                let l_factor = noise_model.sqrt_factor(k).clone();
                for c in 0..y.ncols() {
                    for use_idx in 0..nt {
                        let z = linalg::complex_gaussian(nr, 1, *rng);
                        let colored = &l_factor * z * Complex64::new(amp, 0.0);
                        for i in 0..nr {
                            y[(use_idx * nr + i, c)] += colored[(i, 0)];
                        }
                    }
                }
            }
            let h_ls = kron_apply(&x_pinv, &y, nr) * &v_pinv;
            direct.push(unvec(&h_ls.column(0).into_owned(), nr, nt));
            for elem in 0..n {
                cascaded.push(unvec(&h_ls.column(elem + 1).into_owned(), nr, nt));
            }
        }
    }
    let noise_model = noise
        .map(|(nm, _)| nm.clone())
        .unwrap_or_else(|| NoiseModel::from_config(cfg));
    let noisy = cfg.csi_mode != CsiMode::Perfect;
    Ok(CsiEstimate::build(cfg, noise_model, noisy, direct, cascaded))
}

/// Draw estimates directly from the statistical error model: every estimated
/// matrix is the true one plus i.i.d. columns of `CN(0, error_scale C_eta)`.
/// In perfect mode the true channels are returned unchanged.
pub fn sample_csi_statistical<R: Rng + ?Sized>(
    channels: &ChannelSet,
    cfg: &SystemConfig,
    rng: &mut R,
) -> CsiEstimate {
    if cfg.csi_mode == CsiMode::Perfect {
        return CsiEstimate::perfect(channels, cfg);
    }
    let noise = NoiseModel::from_config(cfg);
    let (k_users, l, n) = (cfg.num_users, cfg.num_subcarriers, cfg.num_irs_elements);
    let nr = cfg.num_rx_antennas;
    let nt = cfg.num_tx_antennas;
    let scale = cfg.error_scale().sqrt();
    let mut direct = Vec::with_capacity(k_users * l);
    let mut cascaded = Vec::with_capacity(k_users * l * n);
    for k in 0..k_users {
        let color = noise.sqrt_factor(k) * Complex64::new(scale, 0.0);
        for ell in 0..l {
            let z = linalg::complex_gaussian(nr, nt, rng);
            direct.push(channels.direct(k, ell) + &color * z);
            for elem in 0..n {
                let term = channels.cascaded_term(k, ell, elem);
                let z = linalg::complex_gaussian(nr, nt, rng);
                cascaded.push(term + &color * z);
            }
        }
    }
    CsiEstimate::build(cfg, noise, true, direct, cascaded)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::gen_scenario;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn tiny_cfg() -> SystemConfig {
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
        cfg
    }

    #[test]
    fn pilot_plan_is_weighted_unitary() {
        let cfg = tiny_cfg();
        let plan = build_pilot_plan(&cfg);
        let gram = plan.x.adjoint() * &plan.x;
        let p_sub = cfg.power_per_subcarrier();
        for i in 0..2 {
            for j in 0..2 {
                let expected = if i == j { p_sub } else { 0.0 };
                assert!((gram[(i, j)].re - expected).abs() < 1e-12);
                assert!(gram[(i, j)].im.abs() < 1e-12);
            }
        }
        // frobenius norm of the pilot block is (P_T/L) N_p
        assert!((linalg::fro_sq(&plan.x) - p_sub * 2.0).abs() < 1e-10);
        // v is 4x4 with v v^* = 4 I, all entries unit magnitude, first row ones
        assert_eq!(plan.v.shape(), (4, 4));
        let vg = &plan.v * plan.v.adjoint();
        assert!(linalg::rel_err(&vg, &(linalg::eye(4) * Complex64::new(4.0, 0.0))) < 1e-12);
        for z in plan.v.iter() {
            assert!((z.norm() - 1.0).abs() < 1e-12);
        }
        for c in 0..4 {
            assert!((plan.v[(0, c)] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn noiseless_ls_recovers_channels_exactly() {
        let cfg = tiny_cfg();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let channels = gen_scenario(&cfg, &mut rng).unwrap();
        let plan = build_pilot_plan(&cfg);
        let est = ls_estimate_noiseless(&channels, &plan, &cfg).unwrap();
        for ell in 0..cfg.num_subcarriers {
            assert!(linalg::rel_err(est.direct(0, ell), channels.direct(0, ell)) < 1e-9);
            for n in 0..cfg.num_irs_elements {
                let truth = channels.cascaded_term(0, ell, n);
                assert!(linalg::rel_err(est.cascaded(0, ell, n), &truth) < 1e-9);
            }
        }
    }

    #[test]
    fn noiseless_unpacking_reconstructs_equivalent_channel() {
        let cfg = tiny_cfg();
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let channels = gen_scenario(&cfg, &mut rng).unwrap();
        let plan = build_pilot_plan(&cfg);
        let est = ls_estimate_noiseless(&channels, &plan, &cfg).unwrap();
        let nu = IrsPhases::new(CVec::from_fn(cfg.num_irs_elements, |i, _| {
            linalg::cis(1.1 * i as f64 + 0.3)
        }));
        for ell in 0..cfg.num_subcarriers {
            let rebuilt = est.equivalent(0, ell, &nu);
            let truth = channels.equivalent(0, ell, &nu);
            assert!(linalg::rel_err(&rebuilt, &truth) < 1e-9);
        }
    }

    #[test]
    fn ls_error_covariance_examples() {
        // P_T = L, white unit noise: identity covariance
        let mut cfg = tiny_cfg();
        cfg.noise_power = 1.0;
        cfg.total_power = cfg.num_subcarriers as f64;
        cfg.snr_db = 0.0;
        let desc = ls_error_covariance(&cfg);
        let m = desc.matrix(0);
        assert!(linalg::rel_err(&m, &linalg::eye(4)) < 1e-12);

        // doubling the power halves the covariance
        cfg.total_power *= 2.0;
        cfg.snr_db = 10.0 * 2.0f64.log10();
        let m2 = ls_error_covariance(&cfg).matrix(0);
        assert!(linalg::rel_err(&m2, &(linalg::eye(4) * Complex64::new(0.5, 0.0))) < 1e-12);
    }

    #[test]
    fn ls_error_covariance_kron_blocks_for_diagonal_noise() {
        let mut cfg = tiny_cfg();
        cfg.total_power = cfg.num_subcarriers as f64; // error_scale = 1
        cfg.snr_db = 0.0;
        let noise = NoiseModel::general(vec![CMat::from_diagonal(&CVec::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(2.0, 0.0),
        ]))])
        .unwrap();
        let desc = LsErrorCovariance {
            error_scale: cfg.error_scale(),
            noise,
            num_tx_antennas: 2,
        };
        let m = desc.matrix(0);
        // explicit Kronecker expansion: diag(1,2,1,2)
        let expected = CMat::from_diagonal(&CVec::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(2.0, 0.0),
        ]));
        assert!(linalg::rel_err(&m, &expected) < 1e-12);
    }

    /// Empirical covariance of vec(direct error) against the model of
    /// record, pooling the independent per-subcarrier errors.
    fn empirical_direct_error_cov(cfg: &SystemConfig, trials: usize, seed: u64) -> (CMat, CMat) {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let channels = gen_scenario(cfg, &mut rng).unwrap();
        let plan = build_pilot_plan(cfg);
        let noise = NoiseModel::from_config(cfg);
        let dim = cfg.num_rx_antennas * cfg.num_tx_antennas;
        let mut cov = CMat::zeros(dim, dim);
        let mut samples = 0usize;
        for _ in 0..trials {
            let est = ls_estimate_full(&channels, &plan, &noise, cfg, &mut rng).unwrap();
            for ell in 0..cfg.num_subcarriers {
                let err = est.direct(0, ell) - channels.direct(0, ell);
                let e = vec_of(&err);
                samples += 1;
                for i in 0..dim {
                    for j in 0..dim {
                        cov[(i, j)] += e[i] * e[j].conj();
                    }
                }
            }
        }
        cov /= Complex64::new(samples as f64, 0.0);
        let model = ls_error_covariance(cfg).matrix(0);
        (cov, model)
    }

    #[test]
    fn ls_empirical_covariance_matches_model() {
        let cfg = tiny_cfg();
        let (cov, model) = empirical_direct_error_cov(&cfg, 2000, 17);
        let scale = model.diagonal().iter().map(|z| z.re).fold(0.0, f64::max);
        let max_dev = (&cov - &model)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(
            max_dev < 0.05 * scale,
            "max deviation {max_dev} vs scale {scale}"
        );
    }

    #[test]
    fn doubling_power_halves_error_variance() {
        let cfg = tiny_cfg();
        let (cov1, _) = empirical_direct_error_cov(&cfg, 1500, 31);
        let mut cfg2 = cfg.clone();
        cfg2.set_snr_db(cfg.snr_db + 10.0 * 2.0f64.log10());
        let (cov2, _) = empirical_direct_error_cov(&cfg2, 1500, 32);
        let v1 = linalg::trace_re(&cov1);
        let v2 = linalg::trace_re(&cov2);
        let ratio = v2 / v1;
        assert!((0.42..=0.58).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn estimation_error_is_uncorrelated_with_channel() {
        let cfg = tiny_cfg();
        let plan = build_pilot_plan(&cfg);
        let noise = NoiseModel::from_config(&cfg);
        let mut rng = ChaCha12Rng::seed_from_u64(77);
        let mut sum_eh = Complex64::new(0.0, 0.0);
        let mut sum_ee = 0.0;
        let mut sum_hh = 0.0;
        let trials = 2000;
        for _ in 0..trials {
            let channels = gen_scenario(&cfg, &mut rng).unwrap();
            let est = ls_estimate_full(&channels, &plan, &noise, &cfg, &mut rng).unwrap();
            let h = channels.direct(0, 0);
            let e = est.direct(0, 0) - h;
            for (ez, hz) in e.iter().zip(h.iter()) {
                sum_eh += ez * hz.conj();
                sum_ee += ez.norm_sqr();
                sum_hh += hz.norm_sqr();
            }
        }
        let corr = sum_eh.norm() / (sum_ee.sqrt() * sum_hh.sqrt());
        assert!(corr < 0.05, "correlation {corr}");
    }

    #[test]
    fn statistical_sampler_matches_ls_statistics() {
        let cfg = tiny_cfg();
        let mut rng = ChaCha12Rng::seed_from_u64(55);
        let channels = gen_scenario(&cfg, &mut rng).unwrap();
        let plan = build_pilot_plan(&cfg);
        let noise = NoiseModel::from_config(&cfg);
        let trials = 2000;
        let mut var_ls = 0.0;
        let mut var_stat = 0.0;
        for _ in 0..trials {
            let ls = ls_estimate_full(&channels, &plan, &noise, &cfg, &mut rng).unwrap();
            let st = sample_csi_statistical(&channels, &cfg, &mut rng);
            var_ls += linalg::fro_sq(&(ls.direct(0, 1) - channels.direct(0, 1)));
            var_stat += linalg::fro_sq(&(st.direct(0, 1) - channels.direct(0, 1)));
        }
        let ratio = var_ls / var_stat;
        assert!((0.9..=1.1).contains(&ratio), "variance ratio {ratio}");
        // per-entry error variance close to error_scale * noise_power
        let dim = (cfg.num_rx_antennas * cfg.num_tx_antennas * trials) as f64;
        let per_entry = var_stat / dim;
        let expected = cfg.error_scale() * cfg.noise_power;
        assert!(
            (per_entry - expected).abs() < 0.05 * expected,
            "per-entry {per_entry} vs {expected}"
        );
    }

    #[test]
    fn perfect_mode_returns_truth_bit_exactly() {
        let mut cfg = tiny_cfg();
        cfg.csi_mode = CsiMode::Perfect;
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let channels = gen_scenario(&cfg, &mut rng).unwrap();
        let est = sample_csi_statistical(&channels, &cfg, &mut rng);
        assert!(!est.noisy);
        for ell in 0..cfg.num_subcarriers {
            assert_eq!(est.direct(0, ell), channels.direct(0, ell));
            for n in 0..cfg.num_irs_elements {
                assert_eq!(est.cascaded(0, ell, n), &channels.cascaded_term(0, ell, n));
            }
        }
    }
}
