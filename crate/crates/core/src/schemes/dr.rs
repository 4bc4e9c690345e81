//! Separate source-channel coding: the remote distortion-rate bound (DR) and
//! its entropy-coded scalar quantization counterpart (ECSQ).
//!
//! Both describe the user's MMSE estimate `u` over an error-free link of `R`
//! bits. With `C_u = Φ diag(λ) Φᴴ`, reverse water-filling at level `γ` gives
//! per-mode distortion `d_i = min(γ, λ_i)`; the test channel reproduces
//! `ĥ` with covariance `Φ diag(λ − d) Φᴴ`.

use rand::Rng;
use std::sync::Arc;

use super::{FeedbackBudget, SchemeId, SchemeOutput, UserMmse};
use crate::model::{Frame, FramedCov};
use crate::numerics::{
    complex_normal, ecsq_threshold, reverse_waterfill, reverse_waterfill_rate,
    spectrum_from_factor, CMat, CVec, C64,
};
use crate::{Error, Result};

/// `D_r = D_mmse + Σ min(γ, λ_i)` at rate `rate`; returns `(D_r, γ)`.
pub fn dr_distortion(values: &[f64], d_mmse: f64, rate: f64) -> (f64, f64) {
    let gamma = reverse_waterfill(values, rate);
    (
        d_mmse + values.iter().map(|&l| l.max(0.0).min(gamma)).sum::<f64>(),
        gamma,
    )
}

/// Inverse of [`dr_distortion`]: the rate needed to reach `d_target`.
pub fn dr_rate(values: &[f64], d_mmse: f64, d_target: f64) -> Result<f64> {
    let budget = d_target - d_mmse;
    if !(budget > 0.0) {
        return Err(Error::Infeasible(format!(
            "target distortion {d_target} does not exceed the MMSE floor {d_mmse}"
        )));
    }
    let mut lam: Vec<f64> = values.iter().copied().filter(|&x| x > 0.0).collect();
    lam.sort_by(f64::total_cmp);
    let total: f64 = lam.iter().sum();
    if budget >= total {
        return Ok(0.0);
    }
    // the j smallest modes are fully lost, the rest sit at the water level
    let mut prefix = 0.0;
    let mut gamma = 0.0;
    for (j, &l) in lam.iter().enumerate() {
        let g = (budget - prefix) / (lam.len() - j) as f64;
        if g <= l {
            gamma = g;
            break;
        }
        prefix += l;
    }
    Ok(reverse_waterfill_rate(&lam, gamma))
}

/// Rate-limited description of the user's MMSE estimate.
#[derive(Debug, Clone)]
pub struct DrCodec {
    pub scheme: SchemeId,
    frame: Arc<Frame>,
    mmse_gain: CMat,
    mmse_err: FramedCov,
    /// Eigenbasis of `C_u` in frame coordinates.
    phi: CMat,
    lambda: Vec<f64>,
    /// Per-mode distortion `min(γ, λ_i)`.
    distortion: Vec<f64>,
    pub gamma: f64,
    pub d_mmse: f64,
    pub rate: f64,
}

fn build(mmse: &UserMmse, rate: f64, scheme: SchemeId) -> Result<DrCodec> {
    let spectrum = spectrum_from_factor(&mmse.c_u.factor)?;
    let keep = spectrum.values().iter().take_while(|&&v| v > 0.0).count();
    let lambda = spectrum.values()[..keep].to_vec();
    let phi = spectrum
        .basis()
        .expect("factor spectra carry a basis")
        .columns(0, keep)
        .into_owned();
    let gamma = match scheme {
        SchemeId::Ecsq => ecsq_threshold(&lambda, rate),
        _ => reverse_waterfill(&lambda, rate),
    };
    let distortion = lambda.iter().map(|&l| l.min(gamma)).collect();
    Ok(DrCodec {
        scheme,
        frame: Arc::clone(&mmse.frame),
        mmse_gain: mmse.gain.clone(),
        mmse_err: mmse.c_err.clone(),
        phi,
        lambda,
        distortion,
        gamma,
        d_mmse: mmse.d_mmse,
        rate,
    })
}

/// DR bound at the budget's rate `R = β_fb C_ul`.
pub fn dr_output(mmse: &UserMmse, budget: &FeedbackBudget) -> Result<DrCodec> {
    build(mmse, budget.rate_bits(), SchemeId::Dr)
}

/// ECSQ at the budget's rate, paying 1.508 bits per encoded coefficient.
pub fn ecsq_output(mmse: &UserMmse, budget: &FeedbackBudget) -> Result<DrCodec> {
    build(mmse, budget.rate_bits(), SchemeId::Ecsq)
}

impl DrCodec {
    /// Eigenvalues of `C_u`, descending.
    pub fn spectrum(&self) -> &[f64] {
        &self.lambda
    }

    pub fn mse(&self) -> f64 {
        self.d_mmse + self.distortion.iter().sum::<f64>()
    }

    /// Number of modes described at positive rate.
    pub fn active_modes(&self) -> usize {
        self.lambda.iter().filter(|&&l| l > self.gamma).count()
    }

    /// Bits actually spent, including the ECSQ overhead where it applies.
    pub fn bits_used(&self) -> f64 {
        match self.scheme {
            SchemeId::Ecsq => crate::numerics::ecsq_rate(&self.lambda, self.gamma),
            _ => reverse_waterfill_rate(&self.lambda, self.gamma),
        }
    }

    fn scaled_phi(&self, per_mode: impl Fn(f64, f64) -> f64) -> CMat {
        let mut f = self.phi.clone();
        for (j, (&l, &d)) in self.lambda.iter().zip(&self.distortion).enumerate() {
            f.column_mut(j).scale_mut(per_mode(l, d));
        }
        f
    }

    pub fn output(&self) -> SchemeOutput {
        let hat = self.scaled_phi(|l, d| (l - d).max(0.0).sqrt());
        let quant = self.scaled_phi(|_, d| d.sqrt());
        let mut err = CMat::zeros(
            self.frame.dim(),
            self.mmse_err.factor.ncols() + quant.ncols(),
        );
        err.columns_mut(0, self.mmse_err.factor.ncols())
            .copy_from(&self.mmse_err.factor);
        err.columns_mut(self.mmse_err.factor.ncols(), quant.ncols())
            .copy_from(&quant);
        SchemeOutput {
            scheme: self.scheme,
            frame: Arc::clone(&self.frame),
            c_hat: FramedCov::new(hat),
            c_err: FramedCov::new(err),
            mse: self.mse(),
        }
    }

    /// Test-channel reproduction of the estimate `u` (frame coordinates):
    /// per mode, `ĥ_i = (1 − d_i/λ_i) u_i + q_i` with
    /// `q_i ~ CN(0, (λ_i − d_i) d_i / λ_i)`, so that `Cov(ĥ) = λ − d` and
    /// `u − ĥ` is orthogonal to `ĥ`.
    pub fn reproduce_coords<R: Rng + ?Sized>(&self, u: &CVec, rng: &mut R) -> CVec {
        let modes = self.phi.ad_mul(u);
        let mut out = CVec::zeros(modes.len());
        for (i, (&l, &d)) in self.lambda.iter().zip(&self.distortion).enumerate() {
            let keep = (l - d).max(0.0);
            out[i] = modes[i] * C64::new(keep / l, 0.0) + complex_normal(rng, keep * d / l);
        }
        &self.phi * out
    }

    /// Full roundtrip from the pilot observation to the BS estimate.
    pub fn roundtrip<R: Rng + ?Sized>(&self, y_tr: &CVec, rng: &mut R) -> CVec {
        let u = &self.mmse_gain * y_tr;
        self.frame.lift(&self.reproduce_coords(&u, rng))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        build_covariance, build_pilot_matrix, observe_pilots, sample_channel, sample_geometry,
        SystemConfig,
    };
    use crate::numerics::{frob2, ECSQ_OVERHEAD_BITS};
    use crate::schemes::user_mmse;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn distortion_examples() {
        let (d, _) = dr_distortion(&[4.0, 1.0], 0.3, 2.0);
        assert!((d - 2.3).abs() < 1e-12);
        let (d, _) = dr_distortion(&[4.0, 1.0], 0.3, 0.0);
        assert!((d - 5.3).abs() < 1e-12);
        let (d, _) = dr_distortion(&[4.0, 1.0], 0.3, 1e4);
        assert!((d - 0.3).abs() < 1e-12);
    }

    #[test]
    fn rate_examples() {
        assert!((dr_rate(&[4.0, 1.0], 0.3, 2.3).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(dr_rate(&[4.0, 1.0], 0.3, 5.3).unwrap(), 0.0);
        assert!(dr_rate(&[4.0, 1.0], 0.3, 0.3).is_err());
    }

    proptest! {
        #[test]
        fn rate_inverts_distortion(
            values in prop::collection::vec(1e-3..1e2f64, 1..10),
            d_mmse in 0.0..5.0f64,
            rate in 0.01..40.0f64,
        ) {
            let (d, _) = dr_distortion(&values, d_mmse, rate);
            // the inverse is only well conditioned while the quantization
            // distortion is visible next to the MMSE floor
            prop_assume!(d - d_mmse > 1e-6 * d);
            let back = dr_rate(&values, d_mmse, d).unwrap();
            prop_assert!((back - rate).abs() < 1e-6, "{} vs {}", back, rate);
        }
    }

    struct Instance {
        cfg: SystemConfig,
        geo: crate::model::ChannelGeometry,
        x: crate::model::PilotMatrix,
        mmse: UserMmse,
    }

    fn instance(seed: u64) -> Instance {
        let cfg = SystemConfig {
            m: 4,
            n: 2,
            k: 1,
            pilot_subcarriers: vec![0, 1],
            t_p: 2,
            snr_dl: 5.0,
            ..SystemConfig::default()
        };
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let geo = sample_geometry(&mut rng, 2, &cfg).unwrap();
        let cov = build_covariance(&geo, &cfg).unwrap();
        let x = build_pilot_matrix(&cfg, &mut rng).unwrap();
        let mmse = user_mmse(&cov, &x).unwrap();
        Instance { cfg, geo, x, mmse }
    }

    #[test]
    fn zero_rate_sends_nothing() {
        let inst = instance(1);
        let budget = FeedbackBudget::new(4, 1.0, 0.0, 4).unwrap();
        for codec in [
            dr_output(&inst.mmse, &budget).unwrap(),
            ecsq_output(&inst.mmse, &budget).unwrap(),
        ] {
            let out = codec.output();
            assert!(out.c_hat.trace() < 1e-12);
            assert!((out.mse - inst.mmse.trace_c_h()).abs() < 1e-9);
            let y = observe_pilots(&inst.x, &CVec::zeros(8), &mut ChaCha12Rng::seed_from_u64(2));
            assert!(
                codec
                    .roundtrip(&y, &mut ChaCha12Rng::seed_from_u64(3))
                    .norm()
                    < 1e-12
            );
        }
    }

    #[test]
    fn ecsq_below_overhead_sends_nothing() {
        let inst = instance(4);
        let codec = build(&inst.mmse, 1.4, SchemeId::Ecsq).unwrap();
        assert_eq!(codec.active_modes(), 0);
        assert!((codec.mse() - inst.mmse.trace_c_h()).abs() < 1e-9);
    }

    #[test]
    fn output_covariances_are_consistent() {
        let inst = instance(5);
        let budget = FeedbackBudget::new(2, 0.4, 0.8, 4).unwrap();
        let codec = dr_output(&inst.mmse, &budget).unwrap();
        let out = codec.output();
        assert!((out.c_hat.trace() + out.c_err.trace() - inst.mmse.trace_c_h()).abs() < 1e-10);
        assert!((out.c_err.trace() - out.mse).abs() < 1e-10);
        let c_h = inst.mmse.channel_cov().core();
        assert!((out.c_hat.core() + out.c_err.core() - c_h).norm() < 1e-10);
        assert!((codec.bits_used() - budget.rate_bits()).abs() < 1e-9);
    }

    #[test]
    fn ecsq_costs_overhead_per_active_mode() {
        // spend the DR rate plus the overhead for the DR active set: ECSQ
        // then reaches exactly the DR distortion
        let inst = instance(6);
        let dr = build(&inst.mmse, 3.0, SchemeId::Dr).unwrap();
        let extra = ECSQ_OVERHEAD_BITS * dr.active_modes() as f64;
        let ecsq = build(&inst.mmse, 3.0 + extra, SchemeId::Ecsq).unwrap();
        assert!((ecsq.mse() - dr.mse()).abs() < 1e-9);
        assert!(ecsq.mse() >= dr.mse() - 1e-12);
        let same_rate = build(&inst.mmse, 3.0, SchemeId::Ecsq).unwrap();
        assert!(same_rate.mse() >= dr.mse());
    }

    #[test]
    fn sampled_pairs_match_closed_form() {
        let inst = instance(7);
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        for scheme in [SchemeId::Dr, SchemeId::Ecsq] {
            let codec = build(&inst.mmse, 4.5, scheme).unwrap();
            let out = codec.output();
            let trials = 10_000;
            let mut errs = Vec::with_capacity(trials);
            let d = inst.mmse.frame().dim();
            let mut s_cov = CMat::zeros(d, d);
            let mut sq = nalgebra::DMatrix::<f64>::zeros(d, d);
            for _ in 0..trials {
                let h = sample_channel(&inst.geo, &inst.cfg, &mut rng);
                let y = observe_pilots(&inst.x, &h, &mut rng);
                let hat = codec.roundtrip(&y, &mut rng);
                errs.push((&h - &hat).norm_squared());
                let c = inst.mmse.frame().coords(&hat);
                let outer = &c * c.adjoint();
                sq += outer.map(|z| z.norm_sqr());
                s_cov += outer;
            }
            let (mean, se) = crate::numerics::mean_and_se(&errs);
            assert!(
                (mean - out.mse).abs() <= 3.0 * se,
                "{scheme}: {mean} ± {se} vs {}",
                out.mse
            );
            let target = out.c_hat.core();
            let t = trials as f64;
            for i in 0..d {
                for j in 0..d {
                    let m = s_cov[(i, j)] / t;
                    let se = ((sq[(i, j)] / t - m.norm_sqr()) / t).sqrt();
                    assert!(
                        (m - target[(i, j)]).norm() <= 3.0 * se + 1e-12,
                        "{scheme} ({i},{j})"
                    );
                }
            }
            assert!(frob2(&out.c_hat.factor) > 0.0);
        }
    }
}
