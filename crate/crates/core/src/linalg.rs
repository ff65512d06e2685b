//! Small dense linear-algebra helpers shared by the models, filter and simulator.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

/// Absolute jitter added to the diagonal when testing positive semidefiniteness.
pub const PSD_JITTER: f64 = 1e-10;

/// Relative asymmetry above which a covariance is considered drifted.
pub const SYMMETRY_TOL: f64 = 1e-9;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn symmetrize_in_place(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

fn scale(m: &DMatrix<f64>) -> f64 {
    m.diagonal().iter().fold(1.0_f64, |acc, v| acc.max(v.abs()))
}

/// Largest absolute asymmetry relative to the matrix scale.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst / scale(m)
}

/// True when `m` (symmetrized) admits a Cholesky factor after adding `PSD_JITTER`
/// to its diagonal.
pub fn is_psd(m: &DMatrix<f64>) -> bool {
    if !m.is_square() || m.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let n = m.nrows();
    let jittered = symmetrize(m) + DMatrix::identity(n, n) * PSD_JITTER;
    jittered.cholesky().is_some()
}

/// True when `m` (symmetrized) is positive definite without jitter.
pub fn is_pd(m: &DMatrix<f64>) -> bool {
    m.is_square() && m.iter().all(|v| v.is_finite()) && symmetrize(m).cholesky().is_some()
}

/// Symmetrize `m` and, if it is no longer PSD, clip negative eigenvalues to zero.
/// Returns true when an eigenvalue repair was needed.
pub fn restore_psd(m: &mut DMatrix<f64>) -> bool {
    symmetrize_in_place(m);
    if is_psd(m) {
        return false;
    }
    let eig = m.clone().symmetric_eigen();
    let clipped = eig.eigenvalues.map(|v| v.max(0.0));
    let mut repaired = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    symmetrize_in_place(&mut repaired);
    *m = repaired;
    true
}

/// Square-root factor `A` with `A Aᵀ = cov`; Cholesky when possible, otherwise an
/// eigen factor with negative eigenvalues clipped (handles singular PSD matrices).
pub fn sqrt_factor(cov: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = symmetrize(cov);
    if let Some(chol) = sym.clone().cholesky() {
        return chol.l();
    }
    let eig = sym.symmetric_eigen();
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots)
}

pub fn standard_normal_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

pub fn sample_gaussian<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    rng: &mut R,
) -> DVector<f64> {
    let factor = sqrt_factor(cov);
    mean + factor * standard_normal_vector(mean.len(), rng)
}

/// Log-density of `N(x; mean, cov)` given the lower Cholesky factor of `cov`.
pub fn log_gaussian_chol(residual: &DVector<f64>, chol_l: &DMatrix<f64>) -> f64 {
    let n = residual.len();
    let whitened = chol_l
        .solve_lower_triangular(residual)
        .expect("Cholesky factor has a nonzero diagonal");
    let log_det: f64 = 2.0 * chol_l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
    -0.5 * (whitened.norm_squared() + log_det + n as f64 * LN_2PI)
}

/// Copy of the `block`-th `n × n` diagonal block.
pub fn diag_block(m: &DMatrix<f64>, block: usize, n: usize) -> DMatrix<f64> {
    m.view((block * n, block * n), (n, n)).into_owned()
}

pub fn vec_block(v: &DVector<f64>, block: usize, n: usize) -> DVector<f64> {
    v.rows(block * n, n).into_owned()
}
