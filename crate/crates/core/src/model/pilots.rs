use rand::Rng;

use super::{Frame, SystemConfig};
use crate::numerics::{cn_vector, CMat, CVec, C64};
use crate::{Error, Result};

/// Pilot symbols sent on one subcarrier: `rows × M`.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotBlock {
    pub subcarrier: usize,
    pub symbols: CMat,
}

/// Block-comb sensing matrix `X` (`β_tr × MN`).
///
/// Row block `ℓ` is zero except for the `M` columns of subcarrier `n_ℓ`,
/// which hold the pilot symbols sent on that subcarrier. Only the nonzero
/// blocks are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotMatrix {
    blocks: Vec<PilotBlock>,
    m: usize,
    n: usize,
}

impl PilotMatrix {
    pub fn new(blocks: Vec<PilotBlock>, m: usize, n: usize) -> Result<Self> {
        for b in &blocks {
            if b.subcarrier >= n {
                return Err(Error::Config(format!(
                    "pilot subcarrier {} out of range for N = {n}",
                    b.subcarrier
                )));
            }
            if b.symbols.ncols() != m {
                return Err(Error::Dimension(format!(
                    "pilot block has {} columns, expected M = {m}",
                    b.symbols.ncols()
                )));
            }
        }
        Ok(PilotMatrix { blocks, m, n })
    }

    /// Direct, noisy access to the whole channel: `X = √snr · I_MN`.
    pub fn direct(m: usize, n: usize, snr: f64) -> Self {
        let eye = CMat::identity(m, m) * C64::new(snr.sqrt(), 0.0);
        let blocks = (0..n)
            .map(|subcarrier| PilotBlock {
                subcarrier,
                symbols: eye.clone(),
            })
            .collect();
        PilotMatrix { blocks, m, n }
    }

    /// Unit-power pilots: i.i.d. `CN(0, 1/M)` entries, `T_p` symbols on each
    /// probed subcarrier.
    pub fn unit<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let var = 1.0 / cfg.m as f64;
        let blocks = cfg
            .pilot_subcarriers
            .iter()
            .map(|&subcarrier| PilotBlock {
                subcarrier,
                symbols: CMat::from_iterator(
                    cfg.t_p,
                    cfg.m,
                    cn_vector(rng, cfg.t_p * cfg.m, var).iter().copied(),
                ),
            })
            .collect();
        Ok(PilotMatrix {
            blocks,
            m: cfg.m,
            n: cfg.n,
        })
    }

    /// Copy with every symbol multiplied by `s` (an amplitude, not a power).
    pub fn scaled(&self, s: f64) -> Self {
        let s = C64::new(s, 0.0);
        PilotMatrix {
            blocks: self
                .blocks
                .iter()
                .map(|b| PilotBlock {
                    subcarrier: b.subcarrier,
                    symbols: &b.symbols * s,
                })
                .collect(),
            m: self.m,
            n: self.n,
        }
    }

    pub fn blocks(&self) -> &[PilotBlock] {
        &self.blocks
    }

    /// `β_tr`, the number of rows.
    pub fn rows(&self) -> usize {
        self.blocks.iter().map(|b| b.symbols.nrows()).sum()
    }

    pub fn cols(&self) -> usize {
        self.m * self.n
    }

    pub fn dense(&self) -> CMat {
        let mut x = CMat::zeros(self.rows(), self.cols());
        let mut r = 0;
        for b in &self.blocks {
            let rows = b.symbols.nrows();
            x.view_mut((r, b.subcarrier * self.m), (rows, self.m))
                .copy_from(&b.symbols);
            r += rows;
        }
        x
    }

    /// `X h` without forming `X`.
    pub fn apply(&self, h: &CVec) -> CVec {
        assert_eq!(
            h.len(),
            self.cols(),
            "channel length does not match the pilot matrix"
        );
        let mut y = CVec::zeros(self.rows());
        let mut r = 0;
        for b in &self.blocks {
            let rows = b.symbols.nrows();
            let hn = h.rows(b.subcarrier * self.m, self.m);
            y.rows_mut(r, rows).copy_from(&(&b.symbols * hn));
            r += rows;
        }
        y
    }

    /// `X U` for the frame basis `U`: the sensing matrix in frame coordinates.
    pub fn project(&self, frame: &Frame) -> CMat {
        let mut xf = CMat::zeros(self.rows(), frame.dim());
        let mut r = 0;
        for b in &self.blocks {
            let rows = b.symbols.nrows();
            xf.rows_mut(r, rows)
                .copy_from(&(&b.symbols * frame.subcarrier_rows(b.subcarrier)));
            r += rows;
        }
        xf
    }
}

/// Pilots with `CN(0, snr_dl/M)` entries.
pub fn build_pilot_matrix<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Result<PilotMatrix> {
    Ok(PilotMatrix::unit(cfg, rng)?.scaled(cfg.snr_dl.sqrt()))
}

/// `y = X h + n` with `n ~ CN(0, I)`.
pub fn observe_pilots<R: Rng + ?Sized>(x: &PilotMatrix, h: &CVec, rng: &mut R) -> CVec {
    x.apply(h) + cn_vector(rng, x.rows(), 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_covariance, sample_channel, sample_geometry};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn default_layout() {
        let cfg = SystemConfig {
            snr_dl: 10.0,
            ..SystemConfig::default()
        };
        let x = build_pilot_matrix(&cfg, &mut ChaCha12Rng::seed_from_u64(1)).unwrap();
        let d = x.dense();
        assert_eq!(d.shape(), (64, 1024));
        assert_eq!(x.blocks().len(), 8);
        let nonzero_cols = (0..1024)
            .filter(|&j| d.column(j).iter().any(|z| z.norm() > 0.0))
            .count();
        assert_eq!(nonzero_cols, 32 * 8);
        for (l, b) in x.blocks().iter().enumerate() {
            assert_eq!(b.symbols.shape(), (8, 32));
            // the row block is zero outside its subcarrier
            for sc in 0..32 {
                let blk = d.view((l * 8, sc * 32), (8, 32));
                assert_eq!(blk.iter().any(|z| z.norm() > 0.0), sc == b.subcarrier);
            }
        }
        let var: f64 = x
            .blocks()
            .iter()
            .flat_map(|b| b.symbols.iter())
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            / 2048.0;
        // 2048 entries of variance 10/32: relative se ≈ 2.2%
        assert!((var - 10.0 / 32.0).abs() < 3.0 * (10.0 / 32.0) / 2048f64.sqrt());
    }

    #[test]
    fn single_probed_subcarrier() {
        let cfg = SystemConfig {
            m: 4,
            n: 3,
            k: 1,
            t: 5,
            t_p: 5,
            pilot_subcarriers: vec![1],
            ..SystemConfig::default()
        };
        let x = build_pilot_matrix(&cfg, &mut ChaCha12Rng::seed_from_u64(2)).unwrap();
        assert_eq!(x.rows(), 5);
        let d = x.dense();
        assert_eq!(d.columns(4, 4), x.blocks()[0].symbols.columns(0, 4));
        assert!(d
            .columns(0, 4)
            .iter()
            .chain(d.columns(8, 4).iter())
            .all(|z| *z == C64::new(0.0, 0.0)));
    }

    #[test]
    fn apply_and_project_match_dense() {
        let cfg = SystemConfig {
            m: 4,
            n: 6,
            k: 2,
            pilot_subcarriers: vec![1, 4],
            t_p: 3,
            snr_dl: 2.0,
            ..SystemConfig::default()
        };
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let x = build_pilot_matrix(&cfg, &mut rng).unwrap();
        let geo = sample_geometry(&mut rng, 3, &cfg).unwrap();
        let h = sample_channel(&geo, &cfg, &mut rng);
        assert!((x.apply(&h) - x.dense() * &h).norm() < 1e-12);
        let cov = build_covariance(&geo, &cfg).unwrap();
        let xf = x.project(cov.frame());
        assert!((xf - x.dense() * cov.frame().basis()).norm() < 1e-12);
    }

    #[test]
    fn observation_noise() {
        let cfg = SystemConfig {
            m: 2,
            n: 4,
            k: 1,
            pilot_subcarriers: vec![0, 2],
            t_p: 4,
            ..SystemConfig::default()
        };
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let x = build_pilot_matrix(&cfg, &mut rng).unwrap();
        let zero = CVec::zeros(8);
        let mut power = 0.0;
        for _ in 0..10_000 {
            power += observe_pilots(&x, &zero, &mut rng).norm_squared();
        }
        // 80000 unit-variance complex entries; |n|² has unit standard deviation
        assert!((power / 80_000.0 - 1.0).abs() < 3.0 / 80_000f64.sqrt());
        let h = cn_vector(&mut rng, 8, 1.0);
        let a = observe_pilots(&x, &h, &mut ChaCha12Rng::seed_from_u64(5));
        let b = observe_pilots(&x, &h, &mut ChaCha12Rng::seed_from_u64(5));
        assert_eq!(a, b);
    }

    #[test]
    fn direct_is_scaled_identity() {
        let x = PilotMatrix::direct(3, 2, 4.0);
        assert_eq!(x.dense(), CMat::identity(6, 6) * C64::new(2.0, 0.0));
    }

    #[test]
    fn rejects_too_many_pilots() {
        let cfg = SystemConfig {
            n: 4,
            pilot_subcarriers: (0..5).collect(),
            ..SystemConfig::default()
        };
        assert!(build_pilot_matrix(&cfg, &mut ChaCha12Rng::seed_from_u64(6)).is_err());
    }
}
