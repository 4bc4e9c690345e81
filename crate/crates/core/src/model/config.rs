use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Physical layer parameters shared by every user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    /// BS antennas (uniform linear array, half-wavelength spacing).
    pub m: usize,
    /// OFDM subcarriers.
    pub n: usize,
    /// Users.
    pub k: usize,
    /// Subcarrier spacing in Hz.
    pub delta_f: f64,
    /// Largest path delay in seconds.
    pub tau_max: f64,
    /// OFDM symbols per coherence block.
    pub t: usize,
    /// Pilot symbols per coherence block.
    pub t_p: usize,
    /// Probed subcarriers, 0-based, strictly increasing.
    pub pilot_subcarriers: Vec<usize>,
    /// Linear DL SNR (total BS power over unit noise).
    pub snr_dl: f64,
    /// Multiuser efficiency of the UL detector.
    pub kappa: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        let (m, n, k) = (32, 32, 6);
        SystemConfig {
            m,
            n,
            k,
            delta_f: 30e3,
            tau_max: 7e-6,
            t: 25,
            t_p: 8,
            pilot_subcarriers: comb_subcarriers(n, 8),
            snr_dl: 1.0,
            kappa: 1.0 - k as f64 / m as f64,
        }
    }
}

/// `count` evenly spaced subcarriers out of `n`, centred in their bins.
pub fn comb_subcarriers(n: usize, count: usize) -> Vec<usize> {
    if count == 0 {
        return Vec::new();
    }
    let spacing = (n / count).max(1);
    (0..count)
        .map(|j| j * spacing + spacing / 2)
        .filter(|&s| s < n)
        .collect()
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.m == 0 || self.n == 0 || self.k == 0 {
            return fail(format!(
                "M, N and K must be positive (got {}, {}, {})",
                self.m, self.n, self.k
            ));
        }
        if self.k > self.m {
            return fail(format!("K = {} exceeds M = {}", self.k, self.m));
        }
        if self.t_p > self.t {
            return fail(format!("T_p = {} exceeds T = {}", self.t_p, self.t));
        }
        if self.pilot_subcarriers.len() > self.n {
            return fail(format!(
                "{} pilot subcarriers requested out of N = {}",
                self.pilot_subcarriers.len(),
                self.n
            ));
        }
        if self.pilot_subcarriers.windows(2).any(|w| w[0] >= w[1]) {
            return fail("pilot subcarriers must be distinct and sorted".into());
        }
        if let Some(&last) = self.pilot_subcarriers.last() {
            if last >= self.n {
                return fail(format!(
                    "pilot subcarrier {last} is out of range for N = {}",
                    self.n
                ));
            }
        }
        if !(0.0..=1.0).contains(&self.kappa) {
            return fail(format!("kappa = {} is outside [0, 1]", self.kappa));
        }
        if !(self.snr_dl >= 0.0) || !self.snr_dl.is_finite() {
            return fail(format!(
                "snr_dl = {} is not a finite nonnegative number",
                self.snr_dl
            ));
        }
        if !(self.delta_f > 0.0) || !(self.tau_max >= 0.0) {
            return fail("delta_f must be positive and tau_max nonnegative".into());
        }
        Ok(())
    }

    pub fn n_p(&self) -> usize {
        self.pilot_subcarriers.len()
    }

    /// Pilot dimension `β_tr = T_p N_p`.
    pub fn beta_tr(&self) -> usize {
        self.t_p * self.n_p()
    }

    /// Per-user UL SNR: the BS power is split over the `K` users.
    pub fn snr_ul(&self) -> f64 {
        self.snr_dl / self.k as f64
    }

    pub fn mn(&self) -> usize {
        self.m * self.n
    }

    pub fn with_snr_dl(&self, snr_dl: f64) -> Self {
        SystemConfig {
            snr_dl,
            ..self.clone()
        }
    }
}

/// `10 log10(x)`.
pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Inverse of [`to_db`].
pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
