//! Shared domain types: reflecting-surface phases, per-user noise model,
//! the channel container, and equivalent-channel assembly.

use num_complex::Complex64;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};

/// Phase coefficients of the reflecting surface, one per element.
///
/// After projection every coefficient has unit magnitude; the amplitude-free
/// variant relaxes that to a total squared norm of `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct IrsPhases {
    pub coeffs: CVec,
}

impl IrsPhases {
    pub fn new(coeffs: CVec) -> Self {
        IrsPhases { coeffs }
    }

    /// All coefficients set to zero: the surface is absent.
    pub fn disabled(n: usize) -> Self {
        IrsPhases { coeffs: CVec::zeros(n) }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.len() == 0
    }

    /// Squared Euclidean norm of the coefficient vector.
    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum()
    }

    /// True if every coefficient has unit magnitude within `tol`.
    pub fn is_unit_modulus(&self, tol: f64) -> bool {
        self.coeffs.iter().all(|z| (z.norm() - 1.0).abs() <= tol)
    }
}

/// Per-user receiver noise covariance, Hermitian positive definite.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    covariances: Vec<CMat>,
    inv_sqrts: Vec<CMat>,
    sqrt_factors: Vec<CMat>,
    uniform_power: Option<f64>,
}

impl NoiseModel {
    /// White noise `sigma^2 I` for every user.
    pub fn white(num_users: usize, num_rx: usize, noise_power: f64) -> Self {
        let c = linalg::eye(num_rx) * Complex64::new(noise_power, 0.0);
        let inv_sqrt = linalg::eye(num_rx) * Complex64::new(1.0 / noise_power.sqrt(), 0.0);
        let sqrt = linalg::eye(num_rx) * Complex64::new(noise_power.sqrt(), 0.0);
        NoiseModel {
            covariances: vec![c; num_users],
            inv_sqrts: vec![inv_sqrt; num_users],
            sqrt_factors: vec![sqrt; num_users],
            uniform_power: Some(noise_power),
        }
    }

    /// General per-user covariances. Each matrix must be Hermitian within
    /// `1e-12` and strictly positive definite.
    pub fn general(covariances: Vec<CMat>) -> Result<Self> {
        let mut inv_sqrts = Vec::with_capacity(covariances.len());
        let mut sqrt_factors = Vec::with_capacity(covariances.len());
        for c in &covariances {
            if linalg::rel_err(c, &c.adjoint()) > 1e-12 {
                return Err(Error::config("noise covariance is not Hermitian"));
            }
            inv_sqrts.push(linalg::hermitian_inv_sqrt(c)?);
            sqrt_factors.push(linalg::hermitian_sqrt_factor(c)?);
        }
        Ok(NoiseModel {
            covariances,
            inv_sqrts,
            sqrt_factors,
            uniform_power: None,
        })
    }

    pub fn from_config(cfg: &SystemConfig) -> Self {
        Self::white(cfg.num_users, cfg.num_rx_antennas, cfg.noise_power)
    }

    pub fn num_users(&self) -> usize {
        self.covariances.len()
    }

    /// Covariance of user `k`.
    pub fn cov(&self, k: usize) -> &CMat {
        &self.covariances[k]
    }

    /// Hermitian principal root `C^{-1/2}` of user `k`'s covariance.
    pub fn inv_sqrt(&self, k: usize) -> &CMat {
        &self.inv_sqrts[k]
    }

    /// Lower factor `l` with `l l^* = C`, for drawing correlated noise.
    pub fn sqrt_factor(&self, k: usize) -> &CMat {
        &self.sqrt_factors[k]
    }

    /// Noise power if the model is white and identical across users.
    pub fn uniform_power(&self) -> Option<f64> {
        self.uniform_power
    }
}

/// True frequency-domain channels for every user and subcarrier.
///
/// Indexing is `(k, ell)` for the per-user links and `ell` for the shared
/// BS-to-surface link; all indices are 0-based.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    pub num_users: usize,
    pub num_subcarriers: usize,
    pub num_irs_elements: usize,
    /// Direct BS-user responses, `N_r x N_t`, indexed `k * L + ell`.
    direct: Vec<CMat>,
    /// BS-surface responses, `N x N_t`, indexed `ell`.
    bs_irs: Vec<CMat>,
    /// Surface-user responses, `N_r x N`, indexed `k * L + ell`.
    irs_user: Vec<CMat>,
}

impl ChannelSet {
    pub fn new(
        num_users: usize,
        num_subcarriers: usize,
        num_irs_elements: usize,
        direct: Vec<CMat>,
        bs_irs: Vec<CMat>,
        irs_user: Vec<CMat>,
    ) -> Result<Self> {
        if direct.len() != num_users * num_subcarriers
            || bs_irs.len() != num_subcarriers
            || irs_user.len() != num_users * num_subcarriers
        {
            return Err(Error::config("channel set has inconsistent cardinality"));
        }
        let set = ChannelSet {
            num_users,
            num_subcarriers,
            num_irs_elements,
            direct,
            bs_irs,
            irs_user,
        };
        for m in set.direct.iter().chain(&set.bs_irs).chain(&set.irs_user) {
            if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::config("channel set contains non-finite entries"));
            }
        }
        Ok(set)
    }

    #[inline]
    pub fn direct(&self, k: usize, ell: usize) -> &CMat {
        &self.direct[k * self.num_subcarriers + ell]
    }

    #[inline]
    pub fn bs_irs(&self, ell: usize) -> &CMat {
        &self.bs_irs[ell]
    }

    #[inline]
    pub fn irs_user(&self, k: usize, ell: usize) -> &CMat {
        &self.irs_user[k * self.num_subcarriers + ell]
    }

    /// Rank-one cascaded term for element `n`: column `n` of the
    /// surface-user response times row `n` of the BS-surface response.
    pub fn cascaded_term(&self, k: usize, ell: usize, n: usize) -> CMat {
        let rx_col = self.irs_user(k, ell).column(n);
        let tx_row = self.bs_irs(ell).row(n);
        CMat::from_fn(rx_col.len(), tx_row.len(), |i, j| rx_col[i] * tx_row[j])
    }

    /// True equivalent channel `H_B + H_I diag(nu) H_BI` for `(k, ell)`.
    pub fn equivalent(&self, k: usize, ell: usize, nu: &IrsPhases) -> CMat {
        let mut h = self.direct(k, ell).clone();
        if !nu.is_empty() {
            let hi = self.irs_user(k, ell);
            let hbi = self.bs_irs(ell);
            // H_I * diag(nu) * H_BI accumulated column-by-column
            for n in 0..nu.len() {
                let nu_n = nu.coeffs[n];
                if nu_n == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let col = hi.column(n);
                let row = hbi.row(n);
                for i in 0..h.nrows() {
                    let scale = nu_n * col[i];
                    for j in 0..h.ncols() {
                        h[(i, j)] += scale * row[j];
                    }
                }
            }
        }
        h
    }

    /// Content hash over every matrix, for verifying paired experiment arms.
    pub fn content_hash(&self) -> u64 {
        let mut h = linalg::FNV_OFFSET;
        for m in self.direct.iter().chain(&self.bs_irs).chain(&self.irs_user) {
            linalg::content_hash_matrix(&mut h, m);
        }
        h
    }
}

/// Sum of the direct response and the phase-weighted cascaded terms:
/// `direct + sum_n nu_n * cascaded[n]`.
pub fn assemble_equivalent_channel(
    direct: &CMat,
    cascaded_terms: &[CMat],
    nu: &IrsPhases,
) -> Result<CMat> {
    if cascaded_terms.len() != nu.len() {
        return Err(Error::config(format!(
            "expected {} cascaded terms, got {}",
            nu.len(),
            cascaded_terms.len()
        )));
    }
    let mut out = direct.clone();
    for (n, term) in cascaded_terms.iter().enumerate() {
        if term.shape() != direct.shape() {
            return Err(Error::config("cascaded term dimension mismatch"));
        }
        let nu_n = nu.coeffs[n];
        out.zip_apply(term, |o, t| *o += nu_n * t);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::complex_gaussian;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn random_phases(n: usize, rng: &mut ChaCha12Rng) -> IrsPhases {
        use rand::Rng;
        IrsPhases::new(CVec::from_fn(n, |_, _| {
            linalg::cis(rng.random_range(0.0..std::f64::consts::TAU))
        }))
    }

    #[test]
    fn assemble_with_no_elements_returns_direct() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let d = complex_gaussian(2, 3, &mut rng);
        let out = assemble_equivalent_channel(&d, &[], &IrsPhases::disabled(0)).unwrap();
        assert_eq!(out, d);
    }

    #[test]
    fn assemble_all_ones_scales_shared_term() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let d = complex_gaussian(2, 3, &mut rng);
        let m = complex_gaussian(2, 3, &mut rng);
        let n = 5;
        let terms = vec![m.clone(); n];
        let nu = IrsPhases::new(CVec::from_element(n, Complex64::new(1.0, 0.0)));
        let out = assemble_equivalent_channel(&d, &terms, &nu).unwrap();
        let expected = &d + &m * Complex64::new(n as f64, 0.0);
        assert!(linalg::rel_err(&out, &expected) < 1e-14);
    }

    #[test]
    fn assemble_matches_bruteforce_sum() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let d = complex_gaussian(2, 2, &mut rng);
        let terms: Vec<CMat> = (0..4).map(|_| complex_gaussian(2, 2, &mut rng)).collect();
        let nu = random_phases(4, &mut rng);
        let out = assemble_equivalent_channel(&d, &terms, &nu).unwrap();
        // elementwise brute-force oracle
        let mut expected = CMat::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = d[(i, j)];
                for (n, term) in terms.iter().enumerate() {
                    acc += nu.coeffs[n] * term[(i, j)];
                }
                expected[(i, j)] = acc;
            }
        }
        assert!(linalg::rel_err(&out, &expected) < 1e-14);
    }

    #[test]
    fn assemble_rejects_dimension_mismatch() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let d = complex_gaussian(2, 3, &mut rng);
        let terms = vec![complex_gaussian(3, 2, &mut rng)];
        let nu = random_phases(1, &mut rng);
        assert!(assemble_equivalent_channel(&d, &terms, &nu).is_err());
    }

    #[test]
    fn assemble_is_linear_in_phases() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let d = complex_gaussian(3, 3, &mut rng);
        let terms: Vec<CMat> = (0..6).map(|_| complex_gaussian(3, 3, &mut rng)).collect();
        let a = random_phases(6, &mut rng);
        let b = random_phases(6, &mut rng);
        let sum = IrsPhases::new(&a.coeffs + &b.coeffs);
        let lhs = assemble_equivalent_channel(&d, &terms, &sum).unwrap();
        let rhs = assemble_equivalent_channel(&d, &terms, &a).unwrap()
            + assemble_equivalent_channel(&CMat::zeros(3, 3), &terms, &b).unwrap();
        assert!(linalg::rel_err(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn white_noise_model_is_scaled_identity() {
        let nm = NoiseModel::white(2, 3, 2.5);
        let expected = linalg::eye(3) * Complex64::new(2.5, 0.0);
        assert_eq!(nm.cov(0), &expected);
        assert_eq!(nm.cov(1), &expected);
        let inv_sqrt = nm.inv_sqrt(0);
        let recon = inv_sqrt * inv_sqrt * nm.cov(0);
        assert!(linalg::rel_err(&recon, &linalg::eye(3)) < 1e-12);
    }

    #[test]
    fn general_noise_model_rejects_non_hermitian() {
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let m = complex_gaussian(2, 2, &mut rng);
        assert!(NoiseModel::general(vec![m]).is_err());
    }

    #[test]
    fn equivalent_channel_matches_term_assembly() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let (k, l, n) = (2, 3, 4);
        let direct: Vec<CMat> = (0..k * l).map(|_| complex_gaussian(2, 3, &mut rng)).collect();
        let bs_irs: Vec<CMat> = (0..l).map(|_| complex_gaussian(n, 3, &mut rng)).collect();
        let irs_user: Vec<CMat> = (0..k * l).map(|_| complex_gaussian(2, n, &mut rng)).collect();
        let set = ChannelSet::new(k, l, n, direct, bs_irs, irs_user).unwrap();
        let nu = random_phases(n, &mut rng);
        for user in 0..k {
            for ell in 0..l {
                let terms: Vec<CMat> =
                    (0..n).map(|e| set.cascaded_term(user, ell, e)).collect();
                let via_terms =
                    assemble_equivalent_channel(set.direct(user, ell), &terms, &nu).unwrap();
                let via_product = set.equivalent(user, ell, &nu);
                assert!(linalg::rel_err(&via_terms, &via_product) < 1e-12);
            }
        }
    }
}
