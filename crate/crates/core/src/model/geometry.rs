use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::SystemConfig;
use crate::numerics::{complex_normal, CVec, C64};
use crate::{Error, Result};

/// Largest angle of arrival drawn by [`sample_geometry`], in radians.
pub const MAX_ANGLE: f64 = PI / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathParams {
    /// Angle in radians, measured from broadside.
    pub theta: f64,
    /// Delay in seconds.
    pub tau: f64,
    /// Path power.
    pub gamma: f64,
}

/// Multipath parameters of one user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelGeometry {
    pub paths: Vec<PathParams>,
}

impl ChannelGeometry {
    pub fn num_paths(&self) -> usize {
        self.paths.len()
    }

    pub fn total_power(&self) -> f64 {
        self.paths.iter().map(|p| p.gamma).sum()
    }

    /// Copy with every path power multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        ChannelGeometry {
            paths: self
                .paths
                .iter()
                .map(|p| PathParams {
                    gamma: p.gamma * s,
                    ..*p
                })
                .collect(),
        }
    }
}

/// Draw `l` paths: angles uniform in ±60°, delays uniform in `[0, τ_max]`,
/// raw powers uniform in `[0.4, 0.8]`, then normalized to unit total power.
pub fn sample_geometry<R: Rng + ?Sized>(
    rng: &mut R,
    l: usize,
    cfg: &SystemConfig,
) -> Result<ChannelGeometry> {
    if l == 0 {
        return Err(Error::Config("a geometry needs at least one path".into()));
    }
    let mut paths: Vec<PathParams> = (0..l)
        .map(|_| PathParams {
            theta: rng.random_range(-MAX_ANGLE..=MAX_ANGLE),
            tau: rng.random_range(0.0..=cfg.tau_max),
            gamma: rng.random_range(0.4..=0.8),
        })
        .collect();
    let total: f64 = paths.iter().map(|p| p.gamma).sum();
    for p in &mut paths {
        p.gamma /= total;
    }
    Ok(ChannelGeometry { paths })
}

/// ULA response, `a_m = exp(jπ m sin θ)` for `m = 0..M`.
pub fn steering_vector(theta: f64, m: usize) -> CVec {
    let phase = PI * theta.sin();
    CVec::from_iterator(m, (0..m).map(|i| C64::from_polar(1.0, phase * i as f64)))
}

/// Per-subcarrier phase rotation of a delay, `b_n = exp(−j2π n Δf τ)`.
pub fn delay_vector(tau: f64, n: usize, delta_f: f64) -> CVec {
    // reduce the per-step phase modulo one turn to keep n·phase accurate
    let turns = (delta_f * tau).fract();
    CVec::from_iterator(
        n,
        (0..n).map(|i| C64::from_polar(1.0, -2.0 * PI * (turns * i as f64).fract())),
    )
}

/// `vec(a bᵀ)` with the antenna index fastest: entry `n·M + m` is `b_n a_m`.
pub fn path_signature(p: &PathParams, cfg: &SystemConfig) -> CVec {
    let a = steering_vector(p.theta, cfg.m);
    let b = delay_vector(p.tau, cfg.n, cfg.delta_f);
    b.kronecker(&a)
}

/// One channel realization `h = Σ_ℓ g_ℓ vec(a_ℓ b_ℓᵀ)`, `g_ℓ ~ CN(0, γ_ℓ)`.
pub fn sample_channel<R: Rng + ?Sized>(
    geo: &ChannelGeometry,
    cfg: &SystemConfig,
    rng: &mut R,
) -> CVec {
    let mut h = CVec::zeros(cfg.mn());
    for p in &geo.paths {
        let g = complex_normal(rng, p.gamma);
        h += path_signature(p, cfg) * g;
    }
    h
}
