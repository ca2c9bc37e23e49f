//! Small complex linear-algebra helpers shared by the channel, CSI and
//! transceiver modules.
//!
//! Everything here operates on dynamically sized `nalgebra` matrices of
//! `Complex64`. Problem dimensions are tiny (antennas, streams), so we favor
//! clarity and numerical robustness over blocked performance.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Scalar with unit magnitude and the given phase.
#[inline]
pub fn cis(phase: f64) -> Complex64 {
    Complex64::new(phase.cos(), phase.sin())
}

/// Draw a circularly-symmetric complex Gaussian scalar with unit variance
/// (real and imaginary parts each have variance 1/2).
#[inline]
pub fn standard_complex<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix with i.i.d. unit-variance circularly-symmetric Gaussian entries.
pub fn complex_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| standard_complex(rng))
}

/// Squared Frobenius norm.
#[inline]
pub fn fro_sq(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// Real part of the trace.
#[inline]
pub fn trace_re(m: &CMat) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

/// Trace of the product `a * b` without forming it.
pub fn trace_product(a: &CMat, b: &CMat) -> Complex64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(b.ncols(), a.nrows());
    let mut acc = ZERO;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Identity matrix of the given size.
pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Solve `a x = b` for Hermitian positive-definite `a` via Cholesky.
pub fn hpd_solve(a: &CMat, b: &CMat) -> Result<CMat> {
    let chol = nalgebra::Cholesky::new(a.clone())
        .ok_or_else(|| Error::degenerate("Cholesky failed: matrix not positive definite"))?;
    Ok(chol.solve(b))
}

/// Hermitian principal inverse square root `a^{-1/2}` via eigendecomposition.
///
/// All eigenvalues must be strictly positive.
pub fn hermitian_inv_sqrt(a: &CMat) -> Result<CMat> {
    let eig = nalgebra::SymmetricEigen::new(a.clone());
    for &lam in eig.eigenvalues.iter() {
        if lam <= 0.0 {
            return Err(Error::degenerate(format!(
                "inverse square root of a matrix with eigenvalue {lam}"
            )));
        }
    }
    let q = &eig.eigenvectors;
    let d = CMat::from_fn(a.nrows(), a.ncols(), |i, j| {
        if i == j {
            Complex64::new(1.0 / eig.eigenvalues[i].sqrt(), 0.0)
        } else {
            ZERO
        }
    });
    Ok(q * d * q.adjoint())
}

/// Lower Cholesky factor `l` with `l l^* = a`, for drawing correlated
/// Gaussian vectors.
pub fn hermitian_sqrt_factor(a: &CMat) -> Result<CMat> {
    let chol = nalgebra::Cholesky::new(a.clone())
        .ok_or_else(|| Error::degenerate("Cholesky failed: matrix not positive definite"))?;
    Ok(chol.l())
}

/// Right singular vectors of `m`, ordered by decreasing singular value.
///
/// Each vector is phase-rotated so that its first component of magnitude
/// above `1e-12` is real and positive, which pins the decomposition to a
/// reproducible representative.
pub fn right_singular_vectors(m: &CMat) -> (Vec<f64>, Vec<CVec>) {
    let svd = nalgebra::SVD::new(m.clone(), false, true);
    let v_t = svd.v_t.expect("SVD requested v_t");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut sigmas = Vec::with_capacity(order.len());
    let mut vectors = Vec::with_capacity(order.len());
    for &idx in &order {
        sigmas.push(svd.singular_values[idx]);
        // row idx of v_t is the adjoint of the right singular vector
        let mut v = CVec::from_fn(m.ncols(), |i, _| v_t[(idx, i)].conj());
        if let Some(lead) = v.iter().find(|z| z.norm() > 1e-12) {
            let phase = lead / lead.norm();
            for z in v.iter_mut() {
                *z /= phase;
            }
        }
        vectors.push(v);
    }
    (sigmas, vectors)
}

/// FNV-1a hash over the raw bit patterns of a complex matrix, used to verify
/// that paired experiment arms consume identical inputs.
pub fn content_hash_matrix(h: &mut u64, m: &CMat) {
    fnv_u64(h, m.nrows() as u64);
    fnv_u64(h, m.ncols() as u64);
    for z in m.iter() {
        fnv_u64(h, z.re.to_bits());
        fnv_u64(h, z.im.to_bits());
    }
}

pub const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

#[inline]
pub fn fnv_u64(state: &mut u64, value: u64) {
    for byte in value.to_le_bytes() {
        *state ^= byte as u64;
        *state = state.wrapping_mul(FNV_PRIME);
    }
}

/// Deterministic seed derivation for independent random streams
/// (SplitMix64 over the chained inputs).
pub fn derive_seed(base: u64, words: &[u64]) -> u64 {
    let mut state = base;
    for &w in words {
        state = state.wrapping_add(0x9e3779b97f4a7c15).wrapping_add(w);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        state = z ^ (z >> 31);
    }
    state
}

/// Relative distance `|a - b| / max(|a|, |b|, floor)` between matrices.
pub fn rel_err(a: &CMat, b: &CMat) -> f64 {
    let diff = (a - b).norm();
    let scale = a.norm().max(b.norm()).max(1e-300);
    diff / scale
}
