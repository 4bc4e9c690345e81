use crate::model::SystemConfig;
use crate::{Error, Result};

/// UL resources available to one user for feeding back its CSI.
///
/// JSCC schemes spend the power `P_ul = β_fb κ M snr_ul` over `β_fb` analog
/// channel uses; SSCC schemes get `R = β_fb log2(1 + κ M snr_ul)` error-free
/// bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackBudget {
    pub beta_fb: usize,
    pub snr_ul: f64,
    pub kappa: f64,
    pub m: usize,
}

impl FeedbackBudget {
    pub fn new(beta_fb: usize, snr_ul: f64, kappa: f64, m: usize) -> Result<Self> {
        if !(snr_ul >= 0.0) || !(0.0..=1.0).contains(&kappa) {
            return Err(Error::Config(format!(
                "invalid feedback budget: snr_ul = {snr_ul}, kappa = {kappa}"
            )));
        }
        Ok(FeedbackBudget {
            beta_fb,
            snr_ul,
            kappa,
            m,
        })
    }

    /// Budget implied by a system configuration.
    pub fn from_config(beta_fb: usize, cfg: &SystemConfig) -> Result<Self> {
        Self::new(beta_fb, cfg.snr_ul(), cfg.kappa, cfg.m)
    }

    /// Effective per-channel-use SNR `κ M snr_ul`.
    pub fn effective_snr(&self) -> f64 {
        self.kappa * self.m as f64 * self.snr_ul
    }

    /// UL capacity per channel use in bits.
    pub fn capacity(&self) -> f64 {
        self.effective_snr().ln_1p() / std::f64::consts::LN_2
    }

    pub fn p_ul(&self) -> f64 {
        self.beta_fb as f64 * self.effective_snr()
    }

    pub fn rate_bits(&self) -> f64 {
        self.beta_fb as f64 * self.capacity()
    }
}
