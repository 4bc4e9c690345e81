use nalgebra::SymmetricEigen;
use rand::Rng;

use super::SubcarrierStats;
use crate::numerics::{pairwise_sum, trace_of_product, trace_re, CMat, C64};
use crate::{Error, Result};

/// A `Ĥᴴ Ĥ` draw is rejected when its condition number exceeds this.
pub const ZF_MAX_CONDITION: f64 = 1e12;

/// Largest tolerated fraction of rejected ZF draws.
pub const ZF_MAX_REJECTED_FRACTION: f64 = 0.01;

/// Per-user rates in bits/s/Hz on one subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct UserRates {
    pub rates: Vec<f64>,
    /// Monte-Carlo standard error of each rate (zero for closed forms).
    pub std_errors: Vec<f64>,
    /// Standard error of the sum over users.
    pub sum_std_error: f64,
}

impl UserRates {
    pub fn exact(rates: Vec<f64>) -> Self {
        let n = rates.len();
        UserRates {
            rates,
            std_errors: vec![0.0; n],
            sum_std_error: 0.0,
        }
    }

    pub fn sum(&self) -> f64 {
        pairwise_sum(&self.rates)
    }
}

/// Users whose estimate carries any energy; the rest cannot be served.
pub(crate) fn served_users(stats: &SubcarrierStats) -> Vec<usize> {
    stats
        .users
        .iter()
        .enumerate()
        .filter(|(_, u)| u.trace_hat() > 1e-12 * trace_re(&u.c_h).max(f64::MIN_POSITIVE))
        .map(|(k, _)| k)
        .collect()
}

/// MRT power scaling `η = snr_dl / tr(Σ_k C_hat_k)`; zero when no user has
/// an estimate.
pub fn mrt_power_scale(stats: &SubcarrierStats, snr_dl: f64) -> f64 {
    let total: f64 = stats.users.iter().map(|u| u.trace_hat()).sum();
    if total > 0.0 {
        snr_dl / total
    } else {
        0.0
    }
}

/// Closed-form UatF rate under MRT:
/// `R_k = log2(1 + tr²(C_hat_k) / (tr((Σ_j C_hat_j) C_h_k) + 1/η))`.
pub fn uatf_mrt(stats: &SubcarrierStats, snr_dl: f64) -> UserRates {
    let eta = mrt_power_scale(stats, snr_dl);
    if eta == 0.0 {
        return UserRates::exact(vec![0.0; stats.k()]);
    }
    let sum_hat = stats.sum_hat();
    UserRates::exact(
        stats
            .users
            .iter()
            .map(|u| {
                let signal = u.trace_hat().powi(2);
                let interference = trace_of_product(&sum_hat, &u.c_h).re;
                (signal / (interference + 1.0 / eta)).ln_1p() / std::f64::consts::LN_2
            })
            .collect(),
    )
}

/// Monte-Carlo moments of the ZF precoder over the estimate distribution.
#[derive(Debug, Clone)]
pub struct ZfMoments {
    /// `tr E[(Ĥᴴ Ĥ)⁻¹]`.
    pub inv_trace: f64,
    /// `E[Ĥ (Ĥᴴ Ĥ)⁻² Ĥᴴ]`.
    pub mid_matrix: CMat,
    pub n_samples: usize,
    pub n_rejected: usize,
    /// Users in `Ĥ`, in column order.
    pub served: Vec<usize>,
    x_samples: Vec<f64>,
    /// `tr(Ĥ (Ĥᴴ Ĥ)⁻² Ĥᴴ C_err_k)` per draw, for each served user.
    y_samples: Vec<Vec<f64>>,
}

/// Draw `Ĥ` with the served users' estimate laws and decompose `Ĥᴴ Ĥ`;
/// returns `None` for an ill-conditioned draw.
pub(crate) fn draw_gram<R: Rng + ?Sized>(
    stats: &SubcarrierStats,
    served: &[usize],
    rng: &mut R,
) -> (CMat, Option<SymmetricEigen<C64, nalgebra::Dyn>>) {
    let m = stats.m();
    let mut h = CMat::zeros(m, served.len());
    for (c, &k) in served.iter().enumerate() {
        h.set_column(c, &stats.users[k].sample_hat(rng));
    }
    let gram = h.ad_mul(&h);
    let gram = (&gram + gram.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(gram);
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(min > 0.0) || max > ZF_MAX_CONDITION * min {
        return (h, None);
    }
    (h, Some(eig))
}

/// `Σ_i f(λ_i) v_i v_iᴴ` of a Hermitian eigendecomposition.
pub(crate) fn spectral_fn(
    eig: &SymmetricEigen<C64, nalgebra::Dyn>,
    f: impl Fn(f64) -> f64,
) -> CMat {
    let mut scaled = eig.eigenvectors.clone();
    for (j, &l) in eig.eigenvalues.iter().enumerate() {
        scaled.column_mut(j).scale_mut(f(l));
    }
    &scaled * eig.eigenvectors.adjoint()
}

/// Estimate the ZF moments from `n_samples` draws.
pub fn zf_moments<R: Rng + ?Sized>(
    stats: &SubcarrierStats,
    n_samples: usize,
    rng: &mut R,
) -> Result<ZfMoments> {
    let m = stats.m();
    let served = served_users(stats);
    if served.len() > m {
        return Err(Error::Config(format!(
            "ZF cannot serve {} users with {m} antennas",
            served.len()
        )));
    }
    let mut mid_sum = CMat::zeros(m, m);
    let mut x_samples = Vec::with_capacity(n_samples);
    let mut y_samples = vec![Vec::with_capacity(n_samples); served.len()];
    let mut rejected = 0;
    if !served.is_empty() {
        for _ in 0..n_samples {
            let (h, eig) = draw_gram(stats, &served, rng);
            let Some(eig) = eig else {
                rejected += 1;
                continue;
            };
            x_samples.push(eig.eigenvalues.iter().map(|l| 1.0 / l).sum());
            let mid = &h * spectral_fn(&eig, |l| 1.0 / (l * l)) * h.adjoint();
            for (c, &k) in served.iter().enumerate() {
                y_samples[c].push(trace_of_product(&mid, &stats.users[k].c_err).re);
            }
            mid_sum += mid;
        }
    }
    if rejected as f64 > ZF_MAX_REJECTED_FRACTION * n_samples as f64 {
        return Err(Error::ZfRejection {
            rejected,
            total: n_samples,
        });
    }
    let accepted = x_samples.len();
    let denom = C64::new(accepted.max(1) as f64, 0.0);
    Ok(ZfMoments {
        inv_trace: pairwise_sum(&x_samples) / accepted.max(1) as f64,
        mid_matrix: mid_sum / denom,
        n_samples: accepted,
        n_rejected: rejected,
        served,
        x_samples,
        y_samples,
    })
}

impl ZfMoments {
    /// ZF power scaling `η̃ = snr_dl / tr E[(Ĥᴴ Ĥ)⁻¹]`.
    pub fn power_scale(&self, snr_dl: f64) -> f64 {
        if self.served.is_empty() || !(self.inv_trace > 0.0) {
            0.0
        } else {
            snr_dl / self.inv_trace
        }
    }

    /// Standard error of `inv_trace`.
    pub fn inv_trace_std_error(&self) -> f64 {
        crate::numerics::mean_and_se(&self.x_samples).1
    }
}

/// UatF rate under ZF:
/// `R_k = log2(1 + 1/(tr(E[Ĥ(ĤᴴĤ)⁻²Ĥᴴ] C_err_k) + 1/η̃))`.
///
/// Users without an estimate get rate zero.
pub fn uatf_zf(stats: &SubcarrierStats, moments: &ZfMoments, snr_dl: f64) -> UserRates {
    let k = stats.k();
    let eta = moments.power_scale(snr_dl);
    if eta == 0.0 || moments.n_samples == 0 {
        return UserRates::exact(vec![0.0; k]);
    }
    let n = moments.n_samples as f64;
    let mut rates = vec![0.0; k];
    let mut ses = vec![0.0; k];
    let mut slopes = Vec::with_capacity(moments.served.len());
    for (c, &user) in moments.served.iter().enumerate() {
        let d = trace_of_product(&moments.mid_matrix, &stats.users[user].c_err)
            .re
            .max(0.0)
            + 1.0 / eta;
        rates[user] = (1.0 / d).ln_1p() / std::f64::consts::LN_2;
        // delta method on D = mean(y_k + x / snr)
        let slope = 1.0 / (std::f64::consts::LN_2 * d * (d + 1.0));
        let z: Vec<f64> = moments
            .x_samples
            .iter()
            .zip(&moments.y_samples[c])
            .map(|(x, y)| y + x / snr_dl)
            .collect();
        ses[user] = slope * crate::numerics::mean_and_se(&z).1;
        slopes.push(slope);
    }
    let combined: Vec<f64> = (0..moments.n_samples)
        .map(|s| {
            moments
                .served
                .iter()
                .enumerate()
                .map(|(c, _)| slopes[c] * (moments.y_samples[c][s] + moments.x_samples[s] / snr_dl))
                .sum()
        })
        .collect();
    let sum_se = if n > 1.0 {
        crate::numerics::mean_and_se(&combined).1
    } else {
        0.0
    };
    UserRates {
        rates,
        std_errors: ses,
        sum_std_error: sum_se,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{cn_vector, mean_and_se};
    use crate::rates::UserBlock;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn random_factor(m: usize, r: usize, scale: f64, rng: &mut ChaCha12Rng) -> CMat {
        CMat::from_iterator(m, r, cn_vector(rng, m * r, scale).iter().copied())
    }

    fn random_stats(m: usize, k: usize, seed: u64) -> SubcarrierStats {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        SubcarrierStats::new(
            (0..k)
                .map(|_| {
                    UserBlock::from_factors(
                        random_factor(m, 3, 0.5, &mut rng),
                        random_factor(m, 2, 0.2, &mut rng),
                    )
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn mrt_scaling_examples() {
        let stats = SubcarrierStats::new(vec![UserBlock::perfect(CMat::identity(4, 4))]).unwrap();
        assert!((mrt_power_scale(&stats, 8.0) - 2.0).abs() < 1e-15);
        let doubled = SubcarrierStats::new(vec![UserBlock::perfect(
            CMat::identity(4, 4) * C64::new(2f64.sqrt(), 0.0),
        )])
        .unwrap();
        assert!((mrt_power_scale(&doubled, 8.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mrt_scalar_perfect_csi() {
        let stats = SubcarrierStats::new(vec![UserBlock::perfect(CMat::identity(1, 1))]).unwrap();
        let snr = 7.0;
        let r = uatf_mrt(&stats, snr).rates[0];
        assert!((r - (1.0 + snr / (snr + 1.0)).log2()).abs() < 1e-12);
    }

    #[test]
    fn mrt_zero_estimate_gets_zero() {
        let mut stats = random_stats(4, 3, 1);
        stats.users[1] = UserBlock::from_factors(
            CMat::zeros(4, 0),
            random_factor(4, 2, 1.0, &mut ChaCha12Rng::seed_from_u64(2)),
        );
        let r = uatf_mrt(&stats, 10.0);
        assert_eq!(r.rates[1], 0.0);
        assert!(r.rates[0] > 0.0);
    }

    #[test]
    fn mrt_rotation_invariant() {
        let stats = random_stats(4, 3, 3);
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let q = random_factor(4, 4, 1.0, &mut rng).qr().q();
        let rotated = SubcarrierStats::new(
            stats
                .users
                .iter()
                .map(|u| UserBlock::from_factors(&q * &u.hat_factor, &q * &u.err_factor))
                .collect(),
        )
        .unwrap();
        let a = uatf_mrt(&stats, 5.0).rates;
        let b = uatf_mrt(&rotated, 5.0).rates;
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn mrt_terms_match_monte_carlo() {
        let stats = random_stats(3, 2, 5);
        let snr = 4.0;
        let eta = mrt_power_scale(&stats, snr);
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let trials = 100_000;
        let mut gain = Vec::with_capacity(trials);
        let mut power = Vec::with_capacity(trials);
        let mut leak = Vec::with_capacity(trials);
        for _ in 0..trials {
            let hats: Vec<_> = stats.users.iter().map(|u| u.sample_hat(&mut rng)).collect();
            let h0 = &hats[0] + stats.users[0].sample_err(&mut rng);
            let v0 = &hats[0] * C64::new(eta.sqrt(), 0.0);
            let v1 = &hats[1] * C64::new(eta.sqrt(), 0.0);
            let g = h0.dotc(&v0);
            gain.push(g.re);
            power.push(g.norm_sqr());
            leak.push(h0.dotc(&v1).norm_sqr());
        }
        let u0 = &stats.users[0];
        let checks = [
            (gain, eta.sqrt() * u0.trace_hat()),
            // fourth moment: E|hᴴ ĥ|² = tr(C_hat C_h) + tr²(C_hat)
            (
                power,
                eta * (trace_of_product(&u0.c_hat, &u0.c_h).re + u0.trace_hat().powi(2)),
            ),
            (
                leak,
                eta * trace_of_product(&stats.users[1].c_hat, &u0.c_h).re,
            ),
        ];
        for (samples, expected) in checks {
            let (mean, se) = mean_and_se(&samples);
            assert!(
                (mean - expected).abs() <= 3.0 * se,
                "{mean} ± {se} vs {expected}"
            );
        }
    }

    #[test]
    fn fourth_moment_identity() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let f = random_factor(3, 2, 1.0, &mut rng);
        let c = &f * f.adjoint();
        let trials = 100_000;
        let mut scalar = Vec::with_capacity(trials);
        let mut vector = Vec::with_capacity(trials);
        for _ in 0..trials {
            scalar.push(
                crate::numerics::complex_normal(&mut rng, 1.7)
                    .norm_sqr()
                    .powi(2),
            );
            vector.push((&f * cn_vector(&mut rng, 2, 1.0)).norm_squared().powi(2));
        }
        let (m, se) = mean_and_se(&scalar);
        assert!((m - 2.0 * 1.7 * 1.7).abs() <= 3.0 * se);
        let expected = trace_of_product(&c, &c).re + trace_re(&c).powi(2);
        let (m, se) = mean_and_se(&vector);
        assert!((m - expected).abs() <= 3.0 * se);
    }

    #[test]
    fn wishart_inverse_mean() {
        let m = 6;
        let stats = SubcarrierStats::new(vec![UserBlock::perfect(CMat::identity(m, m))]).unwrap();
        let mom = zf_moments(&stats, 40_000, &mut ChaCha12Rng::seed_from_u64(8)).unwrap();
        let expected = 1.0 / (m as f64 - 1.0);
        assert!((mom.inv_trace - expected).abs() <= 3.0 * mom.inv_trace_std_error());
        assert_eq!(mom.n_rejected, 0);
    }

    #[test]
    fn moments_converge_and_stay_psd() {
        // M − K ≥ 2 keeps the variance of tr((ĤᴴĤ)⁻¹) finite
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let stats = SubcarrierStats::new(
            (0..2)
                .map(|_| UserBlock::perfect(random_factor(8, 8, 1.0, &mut rng)))
                .collect(),
        )
        .unwrap();
        let small = zf_moments(&stats, 2_000, &mut ChaCha12Rng::seed_from_u64(10)).unwrap();
        let large = zf_moments(&stats, 8_000, &mut ChaCha12Rng::seed_from_u64(11)).unwrap();
        // four times the samples, half the standard error
        let ratio = small.inv_trace_std_error() / large.inv_trace_std_error();
        assert!((ratio - 2.0).abs() < 0.4, "ratio {ratio}");
        for mom in [&small, &large] {
            let eig = SymmetricEigen::new(crate::numerics::hermitian_part(&mom.mid_matrix));
            assert!(eig.eigenvalues.min() >= -1e-12 * eig.eigenvalues.max());
        }
    }

    #[test]
    fn zf_perfect_csi_and_monotone_in_error() {
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        let perfect = SubcarrierStats::new(
            (0..2)
                .map(|_| UserBlock::perfect(random_factor(4, 4, 1.0, &mut rng)))
                .collect(),
        )
        .unwrap();
        let mom = zf_moments(&perfect, 2_000, &mut rng).unwrap();
        let r = uatf_zf(&perfect, &mom, 3.0);
        let eta = mom.power_scale(3.0);
        for &x in &r.rates {
            assert!((x - eta.log2_1p()).abs() < 1e-12);
        }
        let mut noisy = perfect.clone();
        let mut prev = r.rates[0];
        for scale in [0.1, 0.3, 1.0] {
            let hat = noisy.users[0].hat_factor.clone();
            noisy.users[0] =
                UserBlock::from_factors(hat, CMat::identity(4, 4) * C64::new(scale, 0.0));
            let now = uatf_zf(&noisy, &mom, 3.0).rates[0];
            assert!(now < prev);
            prev = now;
        }
    }

    trait Log2OnePlus {
        fn log2_1p(self) -> f64;
    }
    impl Log2OnePlus for f64 {
        fn log2_1p(self) -> f64 {
            self.ln_1p() / std::f64::consts::LN_2
        }
    }

    #[test]
    fn zf_nulls_other_estimates_and_matches_terms() {
        let stats = random_stats(4, 3, 13);
        let snr = 6.0;
        let mom = zf_moments(&stats, 20_000, &mut ChaCha12Rng::seed_from_u64(14)).unwrap();
        let eta = mom.power_scale(snr);
        let mut rng = ChaCha12Rng::seed_from_u64(15);
        let mut leak = Vec::new();
        for _ in 0..20_000 {
            let (h, eig) = draw_gram(&stats, &mom.served, &mut rng);
            let eig = eig.unwrap();
            let v = &h * spectral_fn(&eig, |l| 1.0 / l) * C64::new(eta.sqrt(), 0.0);
            let cross = h.ad_mul(&v);
            for i in 0..3 {
                for j in 0..3 {
                    let target = if i == j { eta.sqrt() } else { 0.0 };
                    assert!((cross[(i, j)] - C64::new(target, 0.0)).norm() <= 1e-8 * eta.sqrt());
                }
            }
            let e0 = stats.users[0].sample_err(&mut rng);
            leak.push(
                (0..3)
                    .map(|j| e0.dotc(&v.column(j)).norm_sqr())
                    .sum::<f64>(),
            );
        }
        // Σ_j E|e_0ᴴ v_j|² = η̃ tr(E[Ĥ(ĤᴴĤ)⁻²Ĥᴴ] C_err_0)
        let expected = eta * trace_of_product(&mom.mid_matrix, &stats.users[0].c_err).re;
        let (mean, se) = mean_and_se(&leak);
        let y_se = eta * mean_and_se(&mom.y_samples[0]).1;
        assert!(
            (mean - expected).abs() <= 3.0 * (se * se + y_se * y_se).sqrt(),
            "{mean} ± {se} vs {expected}"
        );
    }

    #[test]
    fn degenerate_estimates_are_rejected() {
        // two users with identical rank-one estimates: ĤᴴĤ is always singular
        let f = CMat::from_column_slice(
            3,
            1,
            &[C64::new(1.0, 0.0), C64::new(0.5, 0.2), C64::new(-0.3, 0.0)],
        );
        let stats =
            SubcarrierStats::new(vec![UserBlock::perfect(f.clone()), UserBlock::perfect(f)])
                .unwrap();
        let err = zf_moments(&stats, 100, &mut ChaCha12Rng::seed_from_u64(16)).unwrap_err();
        assert!(matches!(err, Error::ZfRejection { .. }));
    }
}
