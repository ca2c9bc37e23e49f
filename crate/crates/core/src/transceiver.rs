//! Closed-form transceiver algebra: robust MMSE filters for the downlink and
//! the dual uplink, the scaling transforms between the two domains, MRT
//! initialization, and the MSE / sum-rate evaluators.
//!
//! The imperfect-CSI terms scale with `error_scale = L / P_T` and with
//! `N + 1`: one estimation error on the direct link plus one per surface
//! element. A design without a surface passes an empty phase vector, which
//! collapses the factor to the direct-link error alone.

use num_complex::Complex64;

use crate::config::SystemConfig;
use crate::csi::CsiEstimate;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::model::{ChannelSet, IrsPhases, NoiseModel};

/// Precoders and filters in both domains, together with the duality scaling
/// factors and the surface phases they were designed for.
///
/// All per-user per-subcarrier maps are flat vectors indexed `k * L + ell`.
#[derive(Debug, Clone)]
pub struct TransceiverState {
    pub num_users: usize,
    pub num_subcarriers: usize,
    /// Downlink precoders `P_k[ell]`, `N_t x N_s`.
    pub precoders: Vec<CMat>,
    /// Downlink receive filters `W_k[ell]`, `N_s x N_r`.
    pub filters: Vec<CMat>,
    /// Dual-uplink precoders `T_k[ell]`, `N_r x N_s`.
    pub mac_precoders: Vec<CMat>,
    /// Dual-uplink receive filters `G_k[ell]`, `N_s x N_t`.
    pub mac_filters: Vec<CMat>,
    /// Downlink scaling factor per subcarrier.
    pub xi: Vec<f64>,
    /// Uplink scaling factor per subcarrier.
    pub zeta: Vec<f64>,
    pub nu: IrsPhases,
}

impl TransceiverState {
    #[inline]
    pub fn idx(&self, k: usize, ell: usize) -> usize {
        k * self.num_subcarriers + ell
    }

    pub fn precoder(&self, k: usize, ell: usize) -> &CMat {
        &self.precoders[self.idx(k, ell)]
    }

    pub fn filter(&self, k: usize, ell: usize) -> &CMat {
        &self.filters[self.idx(k, ell)]
    }

    /// Total downlink transmit power at subcarrier `ell`.
    pub fn downlink_power(&self, ell: usize) -> f64 {
        (0..self.num_users)
            .map(|k| linalg::fro_sq(self.precoder(k, ell)))
            .sum()
    }

    /// Total dual-uplink transmit power at subcarrier `ell`.
    pub fn uplink_power(&self, ell: usize) -> f64 {
        (0..self.num_users)
            .map(|k| linalg::fro_sq(&self.mac_precoders[self.idx(k, ell)]))
            .sum()
    }
}

/// Constant scale applied to the estimation-error covariance in the robust
/// design terms: one direct-link error plus one per surface element.
#[inline]
pub fn error_terms_scale(num_elements: usize) -> f64 {
    num_elements as f64 + 1.0
}

#[inline]
fn idx(k: usize, ell: usize, l: usize) -> usize {
    k * l + ell
}

/// Sum of `P_i P_i^*` and of `tr(P_i P_i^*)` over users at one subcarrier.
fn precoder_gram(precoders: &[CMat], ell: usize, l: usize, num_users: usize) -> (CMat, f64) {
    let nt = precoders[idx(0, ell, l)].nrows();
    let mut gram = CMat::zeros(nt, nt);
    let mut power = 0.0;
    for i in 0..num_users {
        let p = &precoders[idx(i, ell, l)];
        gram.gemm(linalg::ONE, p, &p.adjoint(), linalg::ONE);
        power += linalg::fro_sq(p);
    }
    (gram, power)
}

fn c_in_from(
    h_e: &CMat,
    precoders: &[CMat],
    k: usize,
    ell: usize,
    csi: &CsiEstimate,
    nu: &IrsPhases,
    robust: bool,
) -> CMat {
    let l = csi.num_subcarriers;
    let (gram, power) = precoder_gram(precoders, ell, l, csi.num_users);
    let p_k = &precoders[idx(k, ell, l)];
    let own = p_k * p_k.adjoint();
    let interference = h_e * (gram - own) * h_e.adjoint();
    let mut c_in = interference + csi.noise.cov(k);
    if robust {
        let scale = error_terms_scale(nu.len()) * power * csi.error_scale;
        c_in += csi.noise.cov(k) * Complex64::new(scale, 0.0);
    }
    c_in
}

/// Interference-plus-noise covariance seen by user `k` at subcarrier `ell`:
/// inter-user interference through the estimated equivalent channel, receiver
/// noise, and (when `robust`) the estimation-error contribution
/// `(N + 1) sum_i tr(P_i P_i^*) (L/P_T) C_eta`.
pub fn interference_plus_noise_cov(
    k: usize,
    ell: usize,
    precoders: &[CMat],
    csi: &CsiEstimate,
    nu: &IrsPhases,
    robust: bool,
) -> CMat {
    let h_e = csi.equivalent(k, ell, nu);
    c_in_from(&h_e, precoders, k, ell, csi, nu, robust)
}

/// Downlink MMSE receive filter
/// `W = P^* H^* (H P P^* H^* + C_IN)^{-1}` for user `k` at subcarrier `ell`.
pub fn mmse_downlink_filter(
    k: usize,
    ell: usize,
    precoders: &[CMat],
    csi: &CsiEstimate,
    nu: &IrsPhases,
    robust: bool,
) -> Result<CMat> {
    let h_e = csi.equivalent(k, ell, nu);
    let p_k = &precoders[idx(k, ell, csi.num_subcarriers)];
    let hp = &h_e * p_k;
    let mut a = c_in_from(&h_e, precoders, k, ell, csi, nu, robust);
    a.gemm(linalg::ONE, &hp, &hp.adjoint(), linalg::ONE);
    // W = (A^{-1} H P)^* because A is Hermitian
    Ok(linalg::hpd_solve(&a, &hp)?.adjoint())
}

/// All downlink MMSE filters, indexed `k * L + ell`.
pub fn mmse_downlink_filters(
    precoders: &[CMat],
    csi: &CsiEstimate,
    nu: &IrsPhases,
    robust: bool,
) -> Result<Vec<CMat>> {
    let mut out = Vec::with_capacity(csi.num_users * csi.num_subcarriers);
    for k in 0..csi.num_users {
        for ell in 0..csi.num_subcarriers {
            out.push(mmse_downlink_filter(k, ell, precoders, csi, nu, robust)?);
        }
    }
    Ok(out)
}

/// Robust downlink MSE of user `k` at subcarrier `ell` for an arbitrary
/// receive filter `w_k`, expanded over the estimated channel and the error
/// statistics.
pub fn downlink_mse(
    k: usize,
    ell: usize,
    precoders: &[CMat],
    w_k: &CMat,
    csi: &CsiEstimate,
    nu: &IrsPhases,
    robust: bool,
) -> f64 {
    let l = csi.num_subcarriers;
    let h_e = csi.equivalent(k, ell, nu);
    let (gram, power) = precoder_gram(precoders, ell, l, csi.num_users);
    let p_k = &precoders[idx(k, ell, l)];
    let n_s = p_k.ncols() as f64;

    let wh = w_k * &h_e;
    let signal = &wh * p_k;
    let cross = 2.0 * linalg::trace_re(&signal);
    let quad = linalg::trace_re(&(&wh * &gram * wh.adjoint()));
    let wcw = w_k * csi.noise.cov(k) * w_k.adjoint();
    let noise_term = linalg::trace_re(&wcw);
    // direct-error term plus the nu^* (...) nu cascaded term; the phase
    // factor equals N on the feasible set, giving the (N + 1) form
    let error_term = if robust {
        (1.0 + nu.norm_sq()) * power * csi.error_scale * noise_term
    } else {
        0.0
    };
    n_s - cross + quad + noise_term + error_term
}

/// Downlink MSE of user `k` at subcarrier `ell` with the MMSE filter
/// substituted in: `tr (I + P^* H^* C_IN^{-1} H P)^{-1}`.
pub fn downlink_mse_closed(
    k: usize,
    ell: usize,
    precoders: &[CMat],
    csi: &CsiEstimate,
    nu: &IrsPhases,
    robust: bool,
) -> Result<f64> {
    let h_e = csi.equivalent(k, ell, nu);
    let c_in = c_in_from(&h_e, precoders, k, ell, csi, nu, robust);
    let hp = &h_e * &precoders[idx(k, ell, csi.num_subcarriers)];
    let solved = linalg::hpd_solve(&c_in, &hp)?;
    let inner = linalg::eye(hp.ncols()) + hp.adjoint() * solved;
    let inv = linalg::hpd_solve(&inner, &linalg::eye(hp.ncols()))?;
    Ok(linalg::trace_re(&inv))
}

/// Pieces of the compact uplink MSE shared by the evaluator, the MMSE filter
/// and the phase gradient.
pub(crate) struct UplinkFactors {
    /// `T^* C^{-1/2} H_e` per subcarrier, `N_s x N_t`.
    pub m: Vec<CMat>,
    /// `T^* C^{-1/2}` per subcarrier, `N_s x N_r K`.
    pub u: Vec<CMat>,
    /// `B^{-1}` per subcarrier.
    pub b_inv: Vec<CMat>,
    /// Error level `1 + (N + 1) (L/P_T) sum_i ||T_i[ell]||^2` per
    /// subcarrier, the same level the MMSE filters see.
    pub c: Vec<f64>,
}

impl UplinkFactors {
    pub fn mse_per_subcarrier(&self) -> Vec<f64> {
        self.b_inv.iter().map(linalg::trace_re).collect()
    }

    pub fn mse_total(&self) -> f64 {
        self.b_inv.iter().map(linalg::trace_re).sum()
    }
}

/// `T^* C^{-1/2}` with per-user blocks laid out on the stream/antenna grid.
fn stack_t_adj_cinv(
    mac_precoders: &[CMat],
    ell: usize,
    csi: &CsiEstimate,
    noise: &NoiseModel,
) -> CMat {
    let l = csi.num_subcarriers;
    let k_users = csi.num_users;
    let nr = noise.cov(0).nrows();
    let n_s: usize = (0..k_users)
        .map(|k| mac_precoders[idx(k, ell, l)].ncols())
        .sum();
    let mut u = CMat::zeros(n_s, nr * k_users);
    let mut row = 0;
    for k in 0..k_users {
        let t_k = &mac_precoders[idx(k, ell, l)];
        let block = t_k.adjoint() * noise.inv_sqrt(k);
        u.view_mut((row, k * nr), (t_k.ncols(), nr)).copy_from(&block);
        row += t_k.ncols();
    }
    u
}

pub(crate) fn uplink_factors(
    mac_precoders: &[CMat],
    csi: &CsiEstimate,
    nu: &IrsPhases,
    robust: bool,
) -> Result<UplinkFactors> {
    let l = csi.num_subcarriers;
    let mut m = Vec::with_capacity(l);
    let mut u = Vec::with_capacity(l);
    let mut b_inv = Vec::with_capacity(l);
    let mut c = Vec::with_capacity(l);
    for ell in 0..l {
        let c_ell = subcarrier_noise_level(mac_precoders, ell, csi, nu, robust);
        let u_ell = stack_t_adj_cinv(mac_precoders, ell, csi, &csi.noise);
        let h_stacked = csi.stacked_equivalent(ell, nu);
        let m_ell = &u_ell * &h_stacked;
        let n_s = m_ell.nrows();
        let b = linalg::eye(n_s)
            + &m_ell * m_ell.adjoint() / Complex64::new(c_ell, 0.0);
        b_inv.push(linalg::hpd_solve(&b, &linalg::eye(n_s))?);
        m.push(m_ell);
        u.push(u_ell);
        c.push(c_ell);
    }
    Ok(UplinkFactors { m, u, b_inv, c })
}

/// Compact uplink sum-MSE over all users and subcarriers,
/// `sum_ell tr B_ell^{-1}` with
/// `B_ell = I + T^* C^{-1/2} H_e H_e^* C^{-1/2,*} T / c_ell` and `c_ell` the
/// per-subcarrier error level of [`mmse_uplink_filter`]; this is the value
/// those filters attain. On the optimizer's trajectory the per-subcarrier
/// transmit powers all equal `P_T / L`, so `c_ell` is one constant.
pub fn uplink_mse(
    mac_precoders: &[CMat],
    nu: &IrsPhases,
    csi: &CsiEstimate,
    robust: bool,
) -> Result<f64> {
    Ok(uplink_factors(mac_precoders, csi, nu, robust)?.mse_total())
}

/// Per-subcarrier blocks of the compact uplink MSE; they sum to
/// [`uplink_mse`].
pub fn uplink_mse_per_subcarrier(
    mac_precoders: &[CMat],
    nu: &IrsPhases,
    csi: &CsiEstimate,
    robust: bool,
) -> Result<Vec<f64>> {
    Ok(uplink_factors(mac_precoders, csi, nu, robust)?.mse_per_subcarrier())
}

/// Per-subcarrier denominator `1 + (N + 1) (L/P_T) sum_i ||T_i[ell]||^2`.
fn subcarrier_noise_level(
    mac_precoders: &[CMat],
    ell: usize,
    csi: &CsiEstimate,
    nu: &IrsPhases,
    robust: bool,
) -> f64 {
    if !robust {
        return 1.0;
    }
    let l = csi.num_subcarriers;
    let power: f64 = (0..csi.num_users)
        .map(|k| linalg::fro_sq(&mac_precoders[idx(k, ell, l)]))
        .sum();
    1.0 + error_terms_scale(nu.len()) * csi.error_scale * power
}

/// Uplink MMSE receive filters for all users at subcarrier `ell`:
/// `G = T^* C^{-1/2} H_e (H_e^* C^{-1/2,*} T T^* C^{-1/2} H_e + c I)^{-1}`
/// split into per-user row blocks.
pub fn mmse_uplink_filter(
    ell: usize,
    mac_precoders: &[CMat],
    csi: &CsiEstimate,
    nu: &IrsPhases,
    robust: bool,
) -> Result<Vec<CMat>> {
    let l = csi.num_subcarriers;
    let u_ell = stack_t_adj_cinv(mac_precoders, ell, csi, &csi.noise);
    let h_stacked = csi.stacked_equivalent(ell, nu);
    let m_ell = &u_ell * &h_stacked;
    let c_ell = subcarrier_noise_level(mac_precoders, ell, csi, nu, robust);
    let nt = m_ell.ncols();
    let a = m_ell.adjoint() * &m_ell + linalg::eye(nt) * Complex64::new(c_ell, 0.0);
    // G = M A^{-1}; solve A X = M^* and take the adjoint
    let g = linalg::hpd_solve(&a, &m_ell.adjoint())?.adjoint();
    let mut out = Vec::with_capacity(csi.num_users);
    let mut row = 0;
    for k in 0..csi.num_users {
        let streams = mac_precoders[idx(k, ell, l)].ncols();
        out.push(g.rows(row, streams).into_owned());
        row += streams;
    }
    Ok(out)
}

/// Uplink MMSE filters for every subcarrier, indexed `k * L + ell`.
pub fn mmse_uplink_filters(
    mac_precoders: &[CMat],
    csi: &CsiEstimate,
    nu: &IrsPhases,
    robust: bool,
) -> Result<Vec<CMat>> {
    let l = csi.num_subcarriers;
    let mut out = vec![CMat::zeros(0, 0); csi.num_users * l];
    for ell in 0..l {
        let per_user = mmse_uplink_filter(ell, mac_precoders, csi, nu, robust)?;
        for (k, g) in per_user.into_iter().enumerate() {
            out[idx(k, ell, l)] = g;
        }
    }
    Ok(out)
}

/// Per-user uplink MSE at subcarrier `ell` with the MMSE filter substituted
/// in, using the per-subcarrier error level.
pub fn uplink_mse_user(
    k: usize,
    ell: usize,
    mac_precoders: &[CMat],
    csi: &CsiEstimate,
    nu: &IrsPhases,
    robust: bool,
) -> Result<f64> {
    let l = csi.num_subcarriers;
    let nr = csi.noise.cov(0).nrows();
    let nt = csi.stacked_direct(ell).ncols();
    let c_ell = subcarrier_noise_level(mac_precoders, ell, csi, nu, robust);
    let mut inner = linalg::eye(nt) * Complex64::new(c_ell, 0.0);
    let h_stacked = csi.stacked_equivalent(ell, nu);
    let mut s_k = CMat::zeros(nt, mac_precoders[idx(k, ell, l)].ncols());
    for i in 0..csi.num_users {
        let h_i = h_stacked.rows(i * nr, nr).into_owned();
        let s_i = h_i.adjoint() * csi.noise.inv_sqrt(i) * &mac_precoders[idx(i, ell, l)];
        if i == k {
            s_k = s_i;
        } else {
            inner.gemm(linalg::ONE, &s_i, &s_i.adjoint(), linalg::ONE);
        }
    }
    let solved = linalg::hpd_solve(&inner, &s_k)?;
    let b = linalg::eye(s_k.ncols()) + s_k.adjoint() * solved;
    let b_inv = linalg::hpd_solve(&b, &linalg::eye(s_k.ncols()))?;
    Ok(linalg::trace_re(&b_inv))
}

/// Uplink sum-MSE at subcarrier `ell` for arbitrary per-user filters `g`,
/// expanded over the estimated channels and error statistics.
pub fn uplink_mse_at_filters(
    ell: usize,
    mac_precoders: &[CMat],
    mac_filters: &[CMat],
    csi: &CsiEstimate,
    nu: &IrsPhases,
    robust: bool,
) -> f64 {
    let l = csi.num_subcarriers;
    let nr = csi.noise.cov(0).nrows();
    let h_stacked = csi.stacked_equivalent(ell, nu);
    let nt = h_stacked.ncols();
    // received-signal Gram: sum_i S_i S_i^* + I, plus the error level
    let mut cov = linalg::eye(nt);
    let mut s_blocks = Vec::with_capacity(csi.num_users);
    let mut t_power = 0.0;
    for i in 0..csi.num_users {
        let h_i = h_stacked.rows(i * nr, nr).into_owned();
        let t_i = &mac_precoders[idx(i, ell, l)];
        let s_i = h_i.adjoint() * csi.noise.inv_sqrt(i) * t_i;
        cov.gemm(linalg::ONE, &s_i, &s_i.adjoint(), linalg::ONE);
        t_power += linalg::fro_sq(t_i);
        s_blocks.push(s_i);
    }
    let err_level = if robust {
        error_terms_scale(nu.len()) * csi.error_scale * t_power
    } else {
        0.0
    };
    let mut total = 0.0;
    for k in 0..csi.num_users {
        let g_k = &mac_filters[idx(k, ell, l)];
        let n_s = g_k.nrows() as f64;
        let cross = 2.0 * linalg::trace_re(&(g_k * &s_blocks[k]));
        let quad = linalg::trace_re(&(g_k * &cov * g_k.adjoint()));
        let err = err_level * linalg::fro_sq(g_k);
        total += n_s - cross + quad + err;
    }
    total
}

/// Uplink-to-downlink transform at one subcarrier:
/// `P_k = xi G_k^*` with `xi = sqrt(power / sum_k ||G_k||_F^2)`.
///
/// The resulting downlink power equals `power` exactly.
pub fn mac_to_bc(mac_filters_at_ell: &[CMat], power: f64) -> Result<(Vec<CMat>, f64)> {
    let total: f64 = mac_filters_at_ell.iter().map(linalg::fro_sq).sum();
    if total <= 0.0 {
        return Err(Error::degenerate(
            "uplink filters are all zero; cannot rescale into downlink precoders",
        ));
    }
    let xi = (power / total).sqrt();
    let precoders = mac_filters_at_ell
        .iter()
        .map(|g| g.adjoint() * Complex64::new(xi, 0.0))
        .collect();
    Ok((precoders, xi))
}

/// Downlink-to-uplink transform at one subcarrier:
/// `T_k = C^{-1/2,*} W_k^* zeta` with
/// `zeta = sqrt(power / sum_k ||W_k||_F^2)`.
pub fn bc_to_mac(
    filters_at_ell: &[CMat],
    power: f64,
    noise: &NoiseModel,
) -> Result<(Vec<CMat>, f64)> {
    let total: f64 = filters_at_ell.iter().map(linalg::fro_sq).sum();
    if total <= 0.0 {
        return Err(Error::degenerate(
            "downlink filters are all zero; cannot rescale into uplink precoders",
        ));
    }
    let zeta = (power / total).sqrt();
    let mac_precoders = filters_at_ell
        .iter()
        .enumerate()
        .map(|(k, w)| noise.inv_sqrt(k).adjoint() * w.adjoint() * Complex64::new(zeta, 0.0))
        .collect();
    Ok((mac_precoders, zeta))
}

/// MRT precoders: for each user and subcarrier, the leading right singular
/// vectors of the estimated equivalent channel with uniform power
/// `P_T / (K L N_s)` per column. Returns the precoders and the number of
/// columns that received zero power because the channel rank fell short.
pub fn mrt_precoders(
    csi: &CsiEstimate,
    nu: &IrsPhases,
    cfg: &SystemConfig,
) -> (Vec<CMat>, usize) {
    let (k_users, l) = (csi.num_users, csi.num_subcarriers);
    let mut deficient = 0usize;
    let mut out = Vec::with_capacity(k_users * l);
    for k in 0..k_users {
        for ell in 0..l {
            let n_s = cfg.streams(k, ell);
            let h_e = csi.equivalent(k, ell, nu);
            let (sigmas, vectors) = linalg::right_singular_vectors(&h_e);
            let col_power = cfg.total_power / (k_users * l * n_s) as f64;
            let mut p = CMat::zeros(h_e.ncols(), n_s);
            for s in 0..n_s {
                let usable = sigmas[s] > 1e-12 * sigmas[0].max(1e-300);
                if !usable {
                    deficient += 1;
                    continue; // orthonormal direction kept, zero power
                }
                let col = &vectors[s] * Complex64::new(col_power.sqrt(), 0.0);
                p.column_mut(s).copy_from(&col);
            }
            out.push(p);
        }
    }
    (out, deficient)
}

/// Achievable downlink sum-rate in bit/s/Hz, evaluated on the true channels:
/// `sum_{ell,k} log2 det(I + X_k^{-1} W H_e P_k P_k^* H_e^* W^*)` with `X_k`
/// the filtered interference-plus-noise matrix. Returns the rate and the
/// number of singular `X_k` that needed a `1e-12 I` regularization.
pub fn sum_rate(
    channels: &ChannelSet,
    precoders: &[CMat],
    filters: &[CMat],
    nu: &IrsPhases,
    cfg: &SystemConfig,
) -> (f64, usize) {
    let (k_users, l) = (cfg.num_users, cfg.num_subcarriers);
    let noise = NoiseModel::from_config(cfg);
    let mut rate = 0.0;
    let mut regularized = 0usize;
    for ell in 0..l {
        for k in 0..k_users {
            let w = &filters[idx(k, ell, l)];
            if w.nrows() == 0 {
                continue;
            }
            let h_e = channels.equivalent(k, ell, nu);
            let wh = w * &h_e;
            let mut x = w * noise.cov(k) * w.adjoint();
            for i in 0..k_users {
                if i == k {
                    continue;
                }
                let whp = &wh * &precoders[idx(i, ell, l)];
                x.gemm(linalg::ONE, &whp, &whp.adjoint(), linalg::ONE);
            }
            let signal = &wh * &precoders[idx(k, ell, l)];
            let gram = &signal * signal.adjoint();
            let solved = match linalg::hpd_solve(&x, &gram) {
                Ok(s) => s,
                Err(_) => {
                    regularized += 1;
                    let x_reg = &x + linalg::eye(x.nrows()) * Complex64::new(1e-12, 0.0);
                    match linalg::hpd_solve(&x_reg, &gram) {
                        Ok(s) => s,
                        Err(_) => continue,
                    }
                }
            };
            let a = linalg::eye(x.nrows()) + solved;
            let det = a.determinant().re.max(1.0);
            rate += det.log2();
        }
    }
    (rate, regularized)
}

/// Realized downlink sum-MSE on the true channels for the given precoders,
/// filters and phases (no error-statistics terms: the truth is known here).
pub fn downlink_mse_true_total(
    channels: &ChannelSet,
    precoders: &[CMat],
    filters: &[CMat],
    nu: &IrsPhases,
    cfg: &SystemConfig,
) -> f64 {
    let (k_users, l) = (cfg.num_users, cfg.num_subcarriers);
    let noise = NoiseModel::from_config(cfg);
    let mut total = 0.0;
    for ell in 0..l {
        let mut gram = CMat::zeros(cfg.num_tx_antennas, cfg.num_tx_antennas);
        for i in 0..k_users {
            let p = &precoders[idx(i, ell, l)];
            gram.gemm(linalg::ONE, p, &p.adjoint(), linalg::ONE);
        }
        for k in 0..k_users {
            let w = &filters[idx(k, ell, l)];
            let p_k = &precoders[idx(k, ell, l)];
            let h_e = channels.equivalent(k, ell, nu);
            let wh = w * &h_e;
            let cross = 2.0 * linalg::trace_re(&(&wh * p_k));
            let quad = linalg::trace_re(&(&wh * &gram * wh.adjoint()));
            let noise_term = linalg::trace_re(&(w * noise.cov(k) * w.adjoint()));
            total += p_k.ncols() as f64 - cross + quad + noise_term;
        }
    }
    total
}
