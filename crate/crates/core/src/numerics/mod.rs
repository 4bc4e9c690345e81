//! Dense complex linear algebra and the two water-filling solvers.

mod eig;
mod gaussian;
mod posterior;
mod waterfill;

pub use eig::{hermitian_eig, psd_pinv, spectrum_from_factor, HermitianEigen, Spectrum};
pub use gaussian::{cn_vector, complex_normal, sample_from_covariance, GaussianSampler};
pub use posterior::{linear_gaussian_posterior, NoiseCov, Posterior};
pub use waterfill::{
    ecsq_rate, ecsq_threshold, reverse_waterfill, reverse_waterfill_rate, tkl_objective,
    tkl_waterfill, TklAllocation, ECSQ_OVERHEAD_BITS,
};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Eigenvalues below `RANK_REL_TOL * λ_max` do not count toward numeric rank.
pub const RANK_REL_TOL: f64 = 1e-10;

/// Negative eigenvalues down to `-PSD_CLAMP_TOL * λ_max` are treated as round-off.
pub const PSD_CLAMP_TOL: f64 = 1e-10;

const HERMITIAN_TOL: f64 = 1e-9;

/// Largest `|A_ij - conj(A_ji)|`.
pub fn hermitian_asymmetry(a: &CMat) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in j..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

pub(crate) fn max_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

pub(crate) fn check_hermitian(a: &CMat) -> crate::Result<()> {
    if !a.is_square() {
        return Err(crate::Error::Dimension(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let asym = hermitian_asymmetry(a);
    if asym > HERMITIAN_TOL * max_abs(a).max(1e-300) {
        return Err(crate::Error::NotHermitian { asymmetry: asym });
    }
    Ok(())
}

/// `(A + A^H) / 2`.
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

/// Real trace of a (nominally Hermitian) matrix.
pub fn trace_re(a: &CMat) -> f64 {
    a.diagonal().iter().map(|z| z.re).sum()
}

/// `tr(A B)` without forming the product.
pub fn trace_of_product(a: &CMat, b: &CMat) -> C64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Squared Frobenius norm.
pub fn frob2(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Sum of a slice by pairwise (tree) reduction; the order is fixed so results
/// do not depend on how the values were produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let (l, r) = xs.split_at(n / 2);
            pairwise_sum(l) + pairwise_sum(r)
        }
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(xs) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
