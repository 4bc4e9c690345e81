use crate::numerics::{trace_re, CMat, CVec};
use crate::schemes::SchemeOutput;
use crate::{Error, Result};
use rand::Rng;

/// One user's covariances on one subcarrier, with factors for sampling.
#[derive(Debug, Clone)]
pub struct UserBlock {
    pub hat_factor: CMat,
    pub err_factor: CMat,
    pub c_hat: CMat,
    pub c_err: CMat,
    pub c_h: CMat,
}

impl UserBlock {
    pub fn from_factors(hat_factor: CMat, err_factor: CMat) -> Self {
        let c_hat = &hat_factor * hat_factor.adjoint();
        let c_err = &err_factor * err_factor.adjoint();
        let c_h = &c_hat + &c_err;
        UserBlock {
            hat_factor,
            err_factor,
            c_hat,
            c_err,
            c_h,
        }
    }

    /// Perfect knowledge of a channel with covariance `factor factorᴴ`.
    pub fn perfect(factor: CMat) -> Self {
        let m = factor.nrows();
        Self::from_factors(factor, CMat::zeros(m, 0))
    }

    pub fn dim(&self) -> usize {
        self.c_h.nrows()
    }

    pub fn trace_hat(&self) -> f64 {
        trace_re(&self.c_hat)
    }

    pub fn sample_hat<R: Rng + ?Sized>(&self, rng: &mut R) -> CVec {
        &self.hat_factor * crate::numerics::cn_vector(rng, self.hat_factor.ncols(), 1.0)
    }

    pub fn sample_err<R: Rng + ?Sized>(&self, rng: &mut R) -> CVec {
        &self.err_factor * crate::numerics::cn_vector(rng, self.err_factor.ncols(), 1.0)
    }
}

/// All users' `M × M` covariance blocks on one subcarrier.
#[derive(Debug, Clone)]
pub struct SubcarrierStats {
    pub users: Vec<UserBlock>,
}

impl SubcarrierStats {
    pub fn new(users: Vec<UserBlock>) -> Result<Self> {
        if let Some(first) = users.first() {
            if users.iter().any(|u| u.dim() != first.dim()) {
                return Err(Error::Dimension(
                    "users disagree on the antenna count".into(),
                ));
            }
        }
        Ok(SubcarrierStats { users })
    }

    /// Blocks of subcarrier `sc` from every user's scheme output.
    pub fn from_outputs(outputs: &[SchemeOutput], sc: usize) -> Result<Self> {
        Self::new(
            outputs
                .iter()
                .map(|o| UserBlock::from_factors(o.hat_block_factor(sc), o.err_block_factor(sc)))
                .collect(),
        )
    }

    pub fn k(&self) -> usize {
        self.users.len()
    }

    pub fn m(&self) -> usize {
        self.users.first().map_or(0, UserBlock::dim)
    }

    /// `Σ_k C_hat_k`.
    pub fn sum_hat(&self) -> CMat {
        let m = self.m();
        self.users
            .iter()
            .fold(CMat::zeros(m, m), |acc, u| acc + &u.c_hat)
    }
}

/// Main-diagonal `M × M` blocks of an `MN × MN` matrix.
pub fn extract_subcarrier_blocks(full: &CMat, m: usize, n: usize) -> Result<Vec<CMat>> {
    if full.shape() != (m * n, m * n) {
        return Err(Error::Dimension(format!(
            "expected a {0}x{0} matrix, got {1}x{2}",
            m * n,
            full.nrows(),
            full.ncols()
        )));
    }
    Ok((0..n)
        .map(|sc| full.view((sc * m, sc * m), (m, m)).into_owned())
        .collect())
}
