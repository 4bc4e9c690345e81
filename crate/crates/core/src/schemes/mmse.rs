use std::sync::Arc;

use crate::model::{ChannelCovariance, Frame, FramedCov, PilotMatrix};
use crate::numerics::{linear_gaussian_posterior, CMat, CVec, NoiseCov};
use crate::Result;

/// The user's MMSE estimate of its own channel from the DL pilots.
///
/// Everything is kept in frame coordinates `c = Uᴴ h`.
#[derive(Debug, Clone)]
pub struct UserMmse {
    pub(crate) frame: Arc<Frame>,
    /// `d × L` prior root of the channel.
    pub(crate) root: CMat,
    /// Pilot matrix in frame coordinates, `X U`.
    pub(crate) xf: CMat,
    /// `u = gain · y_tr` in frame coordinates.
    pub(crate) gain: CMat,
    /// Covariance of the estimate `u`.
    pub c_u: FramedCov,
    /// Covariance of `h − u`.
    pub c_err: FramedCov,
    pub d_mmse: f64,
}

/// `u = C_h Xᴴ (X C_h Xᴴ + I)⁻¹ y_tr` and the resulting covariances.
pub fn user_mmse(cov: &ChannelCovariance, pilots: &PilotMatrix) -> Result<UserMmse> {
    let xf = pilots.project(cov.frame());
    let post = linear_gaussian_posterior(cov.root(), &xf, NoiseCov::Identity)?;
    let d_mmse = post.mse();
    Ok(UserMmse {
        frame: cov.shared_frame(),
        root: cov.root().clone(),
        xf,
        gain: post.gain,
        c_u: FramedCov::new(post.est_factor),
        c_err: FramedCov::new(post.err_factor),
        d_mmse,
    })
}

impl UserMmse {
    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn channel_cov(&self) -> FramedCov {
        FramedCov::new(self.root.clone())
    }

    pub fn trace_c_h(&self) -> f64 {
        crate::numerics::frob2(&self.root)
    }

    /// Pilot matrix in frame coordinates.
    pub fn pilots_in_frame(&self) -> &CMat {
        &self.xf
    }

    /// The estimate `u` in frame coordinates.
    pub fn estimate_coords(&self, y_tr: &CVec) -> CVec {
        &self.gain * y_tr
    }

    /// The estimate `u` in the stacked space.
    pub fn estimate(&self, y_tr: &CVec) -> CVec {
        self.frame.lift(&self.estimate_coords(y_tr))
    }
}
