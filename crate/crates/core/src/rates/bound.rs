use rand::Rng;

use super::uatf::{
    draw_gram, served_users, spectral_fn, UserRates, ZfMoments, ZF_MAX_REJECTED_FRACTION,
};
use super::{mrt_power_scale, SubcarrierStats};
use crate::model::SystemConfig;
use crate::numerics::{mean_and_se, pairwise_sum, CMat, C64};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub enum Precoder<'a> {
    Mrt,
    /// ZF, normalized with the power scaling implied by these moments.
    Zf(&'a ZfMoments),
}

/// Monte-Carlo ergodic upper bound
/// `E[log2(1 + |h_kᴴ v_k|² / (Σ_{j≠k} |h_kᴴ v_j|² + 1))]`.
///
/// The precoder is normalized in expectation, with the same `η` (MRT) or
/// `η̃` (ZF) as the corresponding UatF bound.
pub fn rate_upper_bound<R: Rng + ?Sized>(
    stats: &SubcarrierStats,
    precoder: Precoder<'_>,
    snr_dl: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<UserRates> {
    let k = stats.k();
    let (served, eta) = match precoder {
        Precoder::Mrt => ((0..k).collect::<Vec<_>>(), mrt_power_scale(stats, snr_dl)),
        Precoder::Zf(mom) => (served_users(stats), mom.power_scale(snr_dl)),
    };
    if eta == 0.0 || served.is_empty() || n_samples == 0 {
        return Ok(UserRates::exact(vec![0.0; k]));
    }
    let scale = C64::new(eta.sqrt(), 0.0);
    let mut per_user = vec![Vec::with_capacity(n_samples); k];
    let mut sums = Vec::with_capacity(n_samples);
    let mut rejected = 0;
    for _ in 0..n_samples {
        let (hat, eig) = draw_gram(stats, &served, rng);
        let v: CMat = match precoder {
            Precoder::Mrt => &hat * scale,
            Precoder::Zf(_) => {
                let Some(eig) = eig else {
                    rejected += 1;
                    continue;
                };
                &hat * spectral_fn(&eig, |l| 1.0 / l) * scale
            }
        };
        let mut total = 0.0;
        for (c, &user) in served.iter().enumerate() {
            let h = hat.column(c) + stats.users[user].sample_err(rng);
            let gains = h.adjoint() * &v;
            let signal = gains[c].norm_sqr();
            let interference: f64 = gains
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != c)
                .map(|(_, g)| g.norm_sqr())
                .sum();
            let r = (signal / (interference + 1.0)).ln_1p() / std::f64::consts::LN_2;
            per_user[user].push(r);
            total += r;
        }
        sums.push(total);
    }
    if rejected as f64 > ZF_MAX_REJECTED_FRACTION * n_samples as f64 {
        return Err(Error::ZfRejection {
            rejected,
            total: n_samples,
        });
    }
    let mut rates = vec![0.0; k];
    let mut ses = vec![0.0; k];
    for user in &served {
        let (m, se) = mean_and_se(&per_user[*user]);
        rates[*user] = m;
        ses[*user] = se;
    }
    Ok(UserRates {
        rates,
        std_errors: ses,
        sum_std_error: mean_and_se(&sums).1,
    })
}

/// Average sum rate over subcarriers, charging the pilot overhead:
/// `(1/N) Σ_{n∉𝒩_p} Σ_k R_k[n] + ((T − T_p)/(N T)) Σ_{n∈𝒩_p} Σ_k R_k[n]`.
pub fn average_sum_rate(per_subcarrier: &[Vec<f64>], cfg: &SystemConfig) -> f64 {
    let weights = subcarrier_weights(cfg);
    let terms: Vec<f64> = per_subcarrier
        .iter()
        .zip(&weights)
        .map(|(r, w)| w * pairwise_sum(r))
        .collect();
    pairwise_sum(&terms)
}

/// Weight of each subcarrier's sum rate in [`average_sum_rate`].
pub fn subcarrier_weights(cfg: &SystemConfig) -> Vec<f64> {
    let n = cfg.n as f64;
    let pilot_weight = (cfg.t - cfg.t_p) as f64 / (n * cfg.t as f64);
    (0..cfg.n)
        .map(|sc| {
            if cfg.pilot_subcarriers.contains(&sc) {
                pilot_weight
            } else {
                1.0 / n
            }
        })
        .collect()
}
