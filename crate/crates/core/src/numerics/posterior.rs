//! Linear MMSE estimation of a low-rank Gaussian vector from a linear
//! Gaussian observation, in information (whitened SVD) form.
//!
//! The prior is `c = R g` with `g ~ CN(0, I_L)`; the observation is
//! `y = A c + w` with `w ~ CN(0, Σ)`. Writing `B = Σ^{-1/2} A R = U S V^H`,
//! the error covariance is `R V (I + S^T S)^{-1} V^H R^H` and the estimate
//! covariance is `R V S^T S (I + S^T S)^{-1} V^H R^H`. Both come out as
//! explicit factors, so neither is formed by subtracting nearly equal
//! matrices and both stay PSD at any SNR.

use nalgebra::linalg::{Cholesky, SVD};

use super::{frob2, CMat, CVec};
use crate::{Error, Result};

/// Covariance of the observation noise.
#[derive(Debug, Clone, Copy)]
pub enum NoiseCov<'a> {
    Identity,
    Diagonal(&'a [f64]),
    Full(&'a CMat),
}

#[derive(Debug, Clone)]
pub struct Posterior {
    /// `ĉ = gain · y`.
    pub gain: CMat,
    /// Estimate covariance `est_factor est_factor^H`.
    pub est_factor: CMat,
    /// Error covariance `err_factor err_factor^H`.
    pub err_factor: CMat,
    /// Squared singular values of the whitened observation operator.
    pub snr_modes: Vec<f64>,
}

impl Posterior {
    pub fn mse(&self) -> f64 {
        frob2(&self.err_factor)
    }

    pub fn estimate(&self, y: &CVec) -> CVec {
        &self.gain * y
    }
}

enum Whitener {
    Identity,
    Diagonal(Vec<f64>),
    Cholesky(CMat),
}

impl Whitener {
    fn new(noise: NoiseCov<'_>, dim: usize) -> Result<Self> {
        match noise {
            NoiseCov::Identity => Ok(Whitener::Identity),
            NoiseCov::Diagonal(v) => {
                if v.len() != dim {
                    return Err(Error::Dimension(format!(
                        "noise diagonal has {} entries, observation has {dim}",
                        v.len()
                    )));
                }
                if v.iter().any(|&x| x <= 0.0) {
                    return Err(Error::Indefinite {
                        eigenvalue: 0.0,
                        largest: 0.0,
                    });
                }
                Ok(Whitener::Diagonal(
                    v.iter().map(|x| 1.0 / x.sqrt()).collect(),
                ))
            }
            NoiseCov::Full(s) => {
                if s.shape() != (dim, dim) {
                    return Err(Error::Dimension(format!(
                        "noise covariance is {}x{}, observation has {dim}",
                        s.nrows(),
                        s.ncols()
                    )));
                }
                let chol = Cholesky::new(s.clone()).ok_or(Error::Indefinite {
                    eigenvalue: f64::NAN,
                    largest: f64::NAN,
                })?;
                Ok(Whitener::Cholesky(chol.l()))
            }
        }
    }

    /// `Σ^{-1/2} M` (left whitening).
    fn apply(&self, m: &CMat) -> CMat {
        match self {
            Whitener::Identity => m.clone(),
            Whitener::Diagonal(w) => {
                let mut out = m.clone();
                for (i, &s) in w.iter().enumerate() {
                    out.row_mut(i).scale_mut(s);
                }
                out
            }
            Whitener::Cholesky(l) => l
                .solve_lower_triangular(m)
                .expect("Cholesky factor is nonsingular"),
        }
    }

    /// `T Σ^{-1/2}` (right application of the whitening transform).
    fn apply_right(&self, t: &CMat) -> CMat {
        match self {
            Whitener::Identity => t.clone(),
            Whitener::Diagonal(w) => {
                let mut out = t.clone();
                for (j, &s) in w.iter().enumerate() {
                    out.column_mut(j).scale_mut(s);
                }
                out
            }
            Whitener::Cholesky(l) => {
                // T L^{-1} = (L^{-H} T^H)^H
                let lh = l.adjoint();
                lh.solve_upper_triangular(&t.adjoint())
                    .expect("Cholesky factor is nonsingular")
                    .adjoint()
            }
        }
    }
}

/// LMMSE posterior of `c = root · g` observed through `obs` in `noise`.
pub fn linear_gaussian_posterior(
    root: &CMat,
    obs: &CMat,
    noise: NoiseCov<'_>,
) -> Result<Posterior> {
    let (d, l) = root.shape();
    let beta = obs.nrows();
    if obs.ncols() != d {
        return Err(Error::Dimension(format!(
            "observation operator has {} columns, prior lives in {d} dimensions",
            obs.ncols()
        )));
    }
    if beta == 0 || l == 0 {
        return Ok(Posterior {
            gain: CMat::zeros(d, beta),
            est_factor: CMat::zeros(d, 0),
            err_factor: root.clone(),
            snr_modes: vec![0.0; l],
        });
    }
    let whitener = Whitener::new(noise, beta)?;
    let b = whitener.apply(&(obs * root));

    // Pad to at least `l` rows so the SVD returns a full right basis; the
    // null space of `b` is exactly where the error covariance is largest.
    let rows = beta.max(l);
    let mut padded = CMat::zeros(rows, l);
    padded.view_mut((0, 0), (beta, l)).copy_from(&b);
    let svd =
        SVD::try_new(padded, true, true, f64::EPSILON, 0).ok_or(Error::NoConvergence("SVD"))?;
    let u = svd.u.expect("u requested");
    let v = svd.v_t.expect("v requested").adjoint();
    let s: Vec<f64> = svd.singular_values.iter().copied().collect();

    let rv = root * &v;
    let mut est_factor = rv.clone();
    let mut err_factor = rv.clone();
    let mut gain_left = rv;
    for (j, &sj) in s.iter().enumerate() {
        let denom = 1.0 + sj * sj;
        est_factor.column_mut(j).scale_mut(sj / denom.sqrt());
        err_factor.column_mut(j).scale_mut(1.0 / denom.sqrt());
        gain_left.column_mut(j).scale_mut(sj / denom);
    }
    let u_obs: CMat = u.rows(0, beta).into_owned();
    let gain = whitener.apply_right(&(gain_left * u_obs.adjoint()));

    // Drop columns that carry nothing so downstream factors stay narrow.
    let keep: Vec<usize> = (0..s.len()).filter(|&j| s[j] > 0.0).collect();
    let est_factor = est_factor.select_columns(keep.iter());

    Ok(Posterior {
        gain,
        est_factor,
        err_factor,
        snr_modes: s.iter().map(|x| x * x).collect(),
    })
}
