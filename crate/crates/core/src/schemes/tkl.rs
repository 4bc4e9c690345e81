//! Truncated Karhunen-Loève JSCC: rotate the pilot observation into the
//! eigenbasis of its covariance, keep the `β_fb` strongest coordinates, and
//! scale each by the water-filling power allocation.

use nalgebra::linalg::SVD;
use rand::Rng;
use std::sync::Arc;

use super::{FeedbackBudget, SchemeId, SchemeOutput, UserMmse};
use crate::model::{Frame, FramedCov};
use crate::numerics::{
    cn_vector, linear_gaussian_posterior, tkl_waterfill, CMat, CVec, NoiseCov, Posterior,
    TklAllocation, C64,
};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct TkCodec {
    frame: Arc<Frame>,
    /// Leading left singular vectors of `X C_h^{1/2}` (`β_tr × β_fb`).
    pub basis: CMat,
    pub allocation: TklAllocation,
    /// Feedback coordinates with nonzero power.
    active: Vec<usize>,
    posterior: Posterior,
}

/// Build the TKL codec for one user.
///
/// The SVD `X C_h^{1/2} = U Σ Qᴴ` uses the Hermitian PSD square root. The
/// retained coordinates carry `λ̄_i = σ_i²` and `ρ_i = q_iᴴ C_h q_i`.
pub fn tkl_build(mmse: &UserMmse, budget: &FeedbackBudget) -> Result<TkCodec> {
    let beta_tr = mmse.xf.nrows();
    if budget.beta_fb > beta_tr {
        return Err(Error::Infeasible(format!(
            "TKL needs beta_fb <= beta_tr (got {} > {beta_tr})",
            budget.beta_fb
        )));
    }
    let d = mmse.frame.dim();
    let lambda = crate::numerics::spectrum_from_factor(&mmse.root)?;
    // in frame coordinates C_h = V diag(λ) Vᴴ with V the spectrum basis
    let v = lambda
        .basis()
        .expect("factor spectra carry a basis")
        .clone();
    let sqrt_c = {
        let mut f = v.clone();
        for (j, &l) in lambda.values().iter().enumerate() {
            f.column_mut(j).scale_mut(l.max(0.0).sqrt());
        }
        &f * v.adjoint()
    };
    let c_h = &mmse.root * mmse.root.adjoint();
    let a = &mmse.xf * &sqrt_c;

    let (u, sigma, q) = if d == 0 || beta_tr == 0 {
        (CMat::zeros(beta_tr, 0), Vec::new(), CMat::zeros(d, 0))
    } else {
        let svd =
            SVD::try_new(a, true, true, f64::EPSILON, 0).ok_or(Error::NoConvergence("SVD"))?;
        let s: Vec<f64> = svd.singular_values.iter().copied().collect();
        let mut order: Vec<usize> = (0..s.len()).collect();
        order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
        let u_all = svd.u.expect("u requested");
        let q_all = svd.v_t.expect("v requested").adjoint();
        (
            u_all.select_columns(order.iter()),
            order.iter().map(|&i| s[i]).collect(),
            q_all.select_columns(order.iter()),
        )
    };

    let kept = budget.beta_fb.min(sigma.len());
    let lambda_bar: Vec<f64> = sigma[..kept].iter().map(|s| s * s).collect();
    let rho: Vec<f64> = (0..kept)
        .map(|i| {
            let qi = q.column(i);
            (qi.adjoint() * &c_h * qi)[(0, 0)].re.max(0.0)
        })
        .collect();
    let mut allocation = tkl_waterfill(&rho, &lambda_bar, budget.p_ul());
    // coordinates beyond the signal rank carry nothing and get no power
    allocation.alpha.resize(budget.beta_fb, 0.0);
    allocation.rho.resize(budget.beta_fb, 0.0);
    allocation.lambda_bar.resize(budget.beta_fb, 0.0);
    let basis = u.columns(0, kept).into_owned();

    let active: Vec<usize> = (0..kept).filter(|&i| allocation.alpha[i] > 0.0).collect();
    let mut obs = CMat::zeros(active.len(), d);
    let mut noise = Vec::with_capacity(active.len());
    for (r, &i) in active.iter().enumerate() {
        let a_i = allocation.alpha[i];
        let row = basis.column(i).adjoint() * &mmse.xf * C64::new(a_i.sqrt(), 0.0);
        obs.row_mut(r).copy_from(&row);
        noise.push(a_i + 1.0);
    }
    let posterior = linear_gaussian_posterior(&mmse.root, &obs, NoiseCov::Diagonal(&noise))?;
    Ok(TkCodec {
        frame: Arc::clone(&mmse.frame),
        basis,
        allocation,
        active,
        posterior,
    })
}

impl TkCodec {
    pub fn mse(&self) -> f64 {
        self.posterior.mse()
    }

    pub fn output(&self) -> SchemeOutput {
        SchemeOutput {
            scheme: SchemeId::Tkl,
            frame: Arc::clone(&self.frame),
            c_hat: FramedCov::new(self.posterior.est_factor.clone()),
            c_err: FramedCov::new(self.posterior.err_factor.clone()),
            mse: self.mse(),
        }
    }

    /// Feedback symbols `ẑ = diag(√α) S Uᴴ y_tr` (length `β_fb`).
    pub fn encode(&self, y_tr: &CVec) -> CVec {
        let proj = self.basis.ad_mul(y_tr);
        let mut z = CVec::zeros(self.allocation.alpha.len());
        for i in 0..proj.len() {
            z[i] = proj[i] * C64::new(self.allocation.alpha[i].sqrt(), 0.0);
        }
        z
    }

    /// BS estimate from the received feedback `ŷ = ẑ + n_ul`.
    pub fn decode(&self, y_fb: &CVec) -> CVec {
        let used = CVec::from_iterator(self.active.len(), self.active.iter().map(|&i| y_fb[i]));
        self.frame.lift(&self.posterior.estimate(&used))
    }

    pub fn roundtrip<R: Rng + ?Sized>(&self, y_tr: &CVec, rng: &mut R) -> CVec {
        let z = self.encode(y_tr);
        let y_fb = &z + cn_vector(rng, z.len(), 1.0);
        self.decode(&y_fb)
    }
}
