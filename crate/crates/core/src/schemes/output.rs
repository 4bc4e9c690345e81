use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::model::{ChannelCovariance, Frame, FramedCov};
use crate::numerics::{cn_vector, CVec};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeId {
    /// Remote distortion-rate bound with Gaussian test channel.
    Dr,
    /// Entropy-coded scalar quantization.
    Ecsq,
    /// Linear JSCC with a random spreading matrix.
    Ljscc,
    /// Truncated Karhunen-Loève JSCC.
    Tkl,
    /// Perfect CSI at the BS, as a reference.
    Perfect,
}

impl SchemeId {
    pub const ALL: [SchemeId; 5] = [
        SchemeId::Dr,
        SchemeId::Ecsq,
        SchemeId::Ljscc,
        SchemeId::Tkl,
        SchemeId::Perfect,
    ];
    /// The four feedback schemes, without the reference.
    pub const FEEDBACK: [SchemeId; 4] =
        [SchemeId::Dr, SchemeId::Ecsq, SchemeId::Ljscc, SchemeId::Tkl];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeId::Dr => "dr",
            SchemeId::Ecsq => "ecsq",
            SchemeId::Ljscc => "ljscc",
            SchemeId::Tkl => "tkl",
            SchemeId::Perfect => "perfect",
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        SchemeId::ALL
            .into_iter()
            .find(|id| id.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::Parse(format!(
                    "unknown scheme '{s}' (expected one of dr, ecsq, ljscc, tkl, perfect)"
                ))
            })
    }
}

/// What the BS ends up knowing about one user's channel.
///
/// `C_h = C_hat + C_err`, and the estimate is orthogonal to its error.
#[derive(Debug, Clone)]
pub struct SchemeOutput {
    pub scheme: SchemeId,
    pub frame: Arc<Frame>,
    pub c_hat: FramedCov,
    pub c_err: FramedCov,
    pub mse: f64,
}

impl SchemeOutput {
    /// Perfect CSI: the estimate is the channel.
    pub fn perfect(cov: &ChannelCovariance) -> Self {
        SchemeOutput {
            scheme: SchemeId::Perfect,
            frame: cov.shared_frame(),
            c_hat: cov.framed(),
            c_err: FramedCov::zero(cov.rank()),
            mse: 0.0,
        }
    }

    /// `mse / (MN)`, the NMSE for a unit-power geometry.
    pub fn nmse(&self) -> f64 {
        self.mse / (self.frame.m() * self.frame.n()) as f64
    }

    pub fn trace_c_h(&self) -> f64 {
        self.c_hat.trace() + self.c_err.trace()
    }

    /// Estimate factor on subcarrier `sc` (`M × r`).
    pub fn hat_block_factor(&self, sc: usize) -> crate::CMat {
        self.c_hat.block_factor(&self.frame, sc)
    }

    /// Error factor on subcarrier `sc` (`M × r`).
    pub fn err_block_factor(&self, sc: usize) -> crate::CMat {
        self.c_err.block_factor(&self.frame, sc)
    }
}

/// Draw `(h, ĥ)` with `ĥ ~ CN(0, C_hat)` and `h = ĥ + e`, `e ~ CN(0, C_err)`
/// independent of `ĥ`.
pub fn joint_sampler<R: Rng + ?Sized>(output: &SchemeOutput, rng: &mut R) -> (CVec, CVec) {
    let hat = &output.c_hat.factor * cn_vector(rng, output.c_hat.factor.ncols(), 1.0);
    let err = &output.c_err.factor * cn_vector(rng, output.c_err.factor.ncols(), 1.0);
    let h = output.frame.lift(&(&hat + err));
    (h, output.frame.lift(&hat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_covariance, build_pilot_matrix, sample_geometry, SystemConfig};
    use crate::numerics::CMat;
    use crate::schemes::{ljscc_build, user_mmse, FeedbackBudget};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn ids_roundtrip() {
        for id in SchemeId::ALL {
            assert_eq!(id.as_str().parse::<SchemeId>().unwrap(), id);
        }
        assert_eq!(" TKL ".parse::<SchemeId>().unwrap(), SchemeId::Tkl);
        assert!("bogus".parse::<SchemeId>().is_err());
    }

    #[test]
    fn sampler_second_order_statistics() {
        let cfg = SystemConfig {
            m: 2,
            n: 2,
            k: 1,
            pilot_subcarriers: vec![0],
            t_p: 2,
            snr_dl: 2.0,
            ..SystemConfig::default()
        };
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let geo = sample_geometry(&mut rng, 2, &cfg).unwrap();
        let cov = build_covariance(&geo, &cfg).unwrap();
        let x = build_pilot_matrix(&cfg, &mut rng).unwrap();
        let mmse = user_mmse(&cov, &x).unwrap();
        let budget = FeedbackBudget::new(1, 1.0, 0.5, 2).unwrap();
        let out = ljscc_build(&mmse, &budget, &mut rng).unwrap().output();
        let c_h = cov.to_dense();
        let trials = 40_000;
        let mut s_hh = CMat::zeros(4, 4);
        let mut s_he = CMat::zeros(4, 4);
        let mut sq_hh = nalgebra::DMatrix::<f64>::zeros(4, 4);
        let mut sq_he = nalgebra::DMatrix::<f64>::zeros(4, 4);
        for _ in 0..trials {
            let (h, hat) = joint_sampler(&out, &mut rng);
            let e = &h - &hat;
            let hh = &h * h.adjoint();
            let he = &hat * e.adjoint();
            sq_hh += hh.map(|z| z.norm_sqr());
            sq_he += he.map(|z| z.norm_sqr());
            s_hh += hh;
            s_he += he;
        }
        let t = trials as f64;
        for i in 0..4 {
            for j in 0..4 {
                let m_hh = s_hh[(i, j)] / t;
                let se_hh = ((sq_hh[(i, j)] / t - m_hh.norm_sqr()) / t).sqrt();
                assert!((m_hh - c_h[(i, j)]).norm() <= 3.0 * se_hh);
                let m_he = s_he[(i, j)] / t;
                let se_he = ((sq_he[(i, j)] / t - m_he.norm_sqr()) / t).sqrt();
                assert!(m_he.norm() <= 3.0 * se_he.max(1e-300));
            }
        }
    }

    #[test]
    fn perfect_output_has_no_error() {
        let cfg = SystemConfig {
            m: 3,
            n: 2,
            k: 1,
            pilot_subcarriers: vec![0],
            t_p: 1,
            ..SystemConfig::default()
        };
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let cov = build_covariance(&sample_geometry(&mut rng, 2, &cfg).unwrap(), &cfg).unwrap();
        let out = SchemeOutput::perfect(&cov);
        let (h, hat) = joint_sampler(&out, &mut rng);
        assert_eq!(h, hat);
        assert!(h.norm() > 0.0);
        assert_eq!(out.mse, 0.0);
        assert!((out.trace_c_h() - 6.0).abs() < 1e-10);
    }
}
