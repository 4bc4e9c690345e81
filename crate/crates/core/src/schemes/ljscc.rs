//! Linear JSCC: spread the raw pilot observation with a fixed random matrix
//! and send it over the analog UL channel; the BS applies linear MMSE.

use rand::Rng;
use std::sync::Arc;

use super::{FeedbackBudget, SchemeId, SchemeOutput, UserMmse};
use crate::model::{Frame, FramedCov};
use crate::numerics::{
    cn_vector, frob2, linear_gaussian_posterior, CMat, CVec, NoiseCov, Posterior, C64,
};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct LjsccCodec {
    frame: Arc<Frame>,
    /// `β_fb × β_tr` spreading matrix.
    pub spreading: CMat,
    /// Power scaling `ν`.
    pub nu: f64,
    posterior: Posterior,
}

/// Draw a spreading matrix with i.i.d. `CN(0, 1)` entries.
pub fn draw_spreading<R: Rng + ?Sized>(beta_fb: usize, beta_tr: usize, rng: &mut R) -> CMat {
    CMat::from_iterator(
        beta_fb,
        beta_tr,
        cn_vector(rng, beta_fb * beta_tr, 1.0).iter().copied(),
    )
}

/// Build the codec with a freshly drawn spreading matrix.
pub fn ljscc_build<R: Rng + ?Sized>(
    mmse: &UserMmse,
    budget: &FeedbackBudget,
    rng: &mut R,
) -> Result<LjsccCodec> {
    let w = draw_spreading(budget.beta_fb, mmse.xf.nrows(), rng);
    LjsccCodec::with_spreading(mmse, budget, w)
}

impl LjsccCodec {
    /// `ν = P_ul / tr(W (X C_h Xᴴ + I) Wᴴ)`; the BS sees
    /// `ỹ = √ν W y_tr + n_ul` and decodes with linear MMSE.
    pub fn with_spreading(mmse: &UserMmse, budget: &FeedbackBudget, w: CMat) -> Result<Self> {
        if w.shape() != (budget.beta_fb, mmse.xf.nrows()) {
            return Err(Error::Dimension(format!(
                "spreading matrix is {}x{}, expected {}x{}",
                w.nrows(),
                w.ncols(),
                budget.beta_fb,
                mmse.xf.nrows()
            )));
        }
        let wx = &w * &mmse.xf;
        let signal = frob2(&(&wx * &mmse.root));
        let energy = signal + frob2(&w);
        // no feedback uses (or no power) leaves the BS with the prior
        let nu = if energy > 0.0 {
            budget.p_ul() / energy
        } else {
            0.0
        };
        let obs = &wx * C64::new(nu.sqrt(), 0.0);
        let noise =
            (&w * w.adjoint()) * C64::new(nu, 0.0) + CMat::identity(budget.beta_fb, budget.beta_fb);
        let posterior = linear_gaussian_posterior(&mmse.root, &obs, NoiseCov::Full(&noise))?;
        Ok(LjsccCodec {
            frame: Arc::clone(&mmse.frame),
            spreading: w,
            nu,
            posterior,
        })
    }

    pub fn mse(&self) -> f64 {
        self.posterior.mse()
    }

    pub fn output(&self) -> SchemeOutput {
        SchemeOutput {
            scheme: SchemeId::Ljscc,
            frame: Arc::clone(&self.frame),
            c_hat: FramedCov::new(self.posterior.est_factor.clone()),
            c_err: FramedCov::new(self.posterior.err_factor.clone()),
            mse: self.mse(),
        }
    }

    /// Transmitted feedback symbols `√ν W y_tr`.
    pub fn encode(&self, y_tr: &CVec) -> CVec {
        &self.spreading * y_tr * C64::new(self.nu.sqrt(), 0.0)
    }

    /// BS estimate from the received feedback `ỹ`.
    pub fn decode(&self, y_fb: &CVec) -> CVec {
        self.frame.lift(&self.posterior.estimate(y_fb))
    }

    pub fn roundtrip<R: Rng + ?Sized>(&self, y_tr: &CVec, rng: &mut R) -> CVec {
        let z = self.encode(y_tr);
        let y_fb = &z + cn_vector(rng, z.len(), 1.0);
        self.decode(&y_fb)
    }
}
