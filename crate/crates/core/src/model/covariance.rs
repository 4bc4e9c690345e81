use std::sync::Arc;

use super::{path_signature, ChannelGeometry, SystemConfig};
use crate::numerics::{frob2, spectrum_from_factor, CMat, CVec, C64, RANK_REL_TOL};
use crate::Result;

/// Orthonormal basis of the range of a channel covariance, in the stacked
/// `MN`-dimensional space (antenna index fastest).
///
/// Every covariance a scheme produces for this user lives in this range, so
/// it is stored as a small factor in frame coordinates.
#[derive(Debug, Clone)]
pub struct Frame {
    basis: CMat,
    m: usize,
    n: usize,
}

impl Frame {
    pub fn new(basis: CMat, m: usize, n: usize) -> Self {
        assert_eq!(basis.nrows(), m * n, "frame basis must have M·N rows");
        Frame { basis, m, n }
    }

    pub fn basis(&self) -> &CMat {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Rows of the basis belonging to subcarrier `sc` (an `M × d` slice).
    pub fn subcarrier_rows(&self, sc: usize) -> CMat {
        self.basis.rows(sc * self.m, self.m).into_owned()
    }

    /// Frame coordinates to the stacked space.
    pub fn lift(&self, c: &CVec) -> CVec {
        &self.basis * c
    }

    /// Orthogonal projection of a stacked vector to frame coordinates.
    pub fn coords(&self, h: &CVec) -> CVec {
        self.basis.ad_mul(h)
    }
}

/// A PSD matrix `U F Fᴴ Uᴴ` with `U` the frame basis and `F` a factor in frame
/// coordinates.
#[derive(Debug, Clone)]
pub struct FramedCov {
    pub factor: CMat,
}

impl FramedCov {
    pub fn new(factor: CMat) -> Self {
        FramedCov { factor }
    }

    pub fn zero(dim: usize) -> Self {
        FramedCov {
            factor: CMat::zeros(dim, 0),
        }
    }

    /// `F Fᴴ`, the matrix in frame coordinates.
    pub fn core(&self) -> CMat {
        &self.factor * self.factor.adjoint()
    }

    pub fn trace(&self) -> f64 {
        frob2(&self.factor)
    }

    pub fn to_dense(&self, frame: &Frame) -> CMat {
        let lifted = frame.basis() * &self.factor;
        &lifted * lifted.adjoint()
    }

    /// Factor of the `M × M` block on subcarrier `sc`.
    pub fn block_factor(&self, frame: &Frame, sc: usize) -> CMat {
        frame.subcarrier_rows(sc) * &self.factor
    }

    pub fn subcarrier_block(&self, frame: &Frame, sc: usize) -> CMat {
        let f = self.block_factor(frame, sc);
        &f * f.adjoint()
    }
}

/// Second-order statistics of one user's channel.
///
/// With `G` the `MN × L` matrix of scaled path signatures, `C = G Gᴴ`. The
/// thin SVD `G = U S Vᴴ` gives the eigenvalues `s²` and the frame `U`; the
/// channel in frame coordinates is `c = root · g` with `root = S Vᴴ` and
/// `g ~ CN(0, I_L)` the path gains.
#[derive(Debug, Clone)]
pub struct ChannelCovariance {
    frame: Arc<Frame>,
    eigenvalues: Vec<f64>,
    root: CMat,
}

impl ChannelCovariance {
    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    /// Shared handle to the frame, for outputs that outlive this borrow.
    pub fn shared_frame(&self) -> Arc<Frame> {
        Arc::clone(&self.frame)
    }

    /// Nonzero eigenvalues, descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Eigenvectors belonging to [`Self::eigenvalues`].
    pub fn eigenvectors(&self) -> &CMat {
        self.frame.basis()
    }

    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `d × L` map from path gains to frame coordinates.
    pub fn root(&self) -> &CMat {
        &self.root
    }

    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    /// The covariance itself as a framed factor.
    pub fn framed(&self) -> FramedCov {
        FramedCov::new(self.root.clone())
    }

    pub fn to_dense(&self) -> CMat {
        self.framed().to_dense(&self.frame)
    }

    /// `M × M` covariance of the channel on subcarrier `sc`.
    pub fn subcarrier_block(&self, sc: usize) -> CMat {
        self.framed().subcarrier_block(&self.frame, sc)
    }
}

/// `C = Σ_ℓ γ_ℓ (b_ℓ b_ℓᴴ) ⊗ (a_ℓ a_ℓᴴ)` and its eigendecomposition.
pub fn build_covariance(geo: &ChannelGeometry, cfg: &SystemConfig) -> Result<ChannelCovariance> {
    let mn = cfg.mn();
    let mut g = CMat::zeros(mn, geo.num_paths());
    for (j, p) in geo.paths.iter().enumerate() {
        g.set_column(
            j,
            &(path_signature(p, cfg) * C64::new(p.gamma.max(0.0).sqrt(), 0.0)),
        );
    }
    let spectrum = spectrum_from_factor(&g)?;
    let values = spectrum.values();
    let cutoff = values.first().copied().unwrap_or(0.0) * RANK_REL_TOL;
    let rank = values
        .iter()
        .take_while(|&&v| v > cutoff && v > 0.0)
        .count();
    let basis = spectrum
        .basis()
        .expect("factor spectra carry a basis")
        .columns(0, rank)
        .into_owned();
    let root = basis.ad_mul(&g);
    Ok(ChannelCovariance {
        frame: Arc::new(Frame::new(basis, cfg.m, cfg.n)),
        eigenvalues: values[..rank].to_vec(),
        root,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample_geometry, PathParams};
    use crate::numerics::hermitian_eig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn small(m: usize, n: usize) -> SystemConfig {
        SystemConfig {
            m,
            n,
            k: 1,
            pilot_subcarriers: vec![0],
            ..SystemConfig::default()
        }
    }

    /// Direct evaluation of the Kronecker-sum definition.
    fn explicit(geo: &ChannelGeometry, cfg: &SystemConfig) -> CMat {
        let mut c = CMat::zeros(cfg.mn(), cfg.mn());
        for p in &geo.paths {
            let a = crate::model::steering_vector(p.theta, cfg.m);
            let b = crate::model::delay_vector(p.tau, cfg.n, cfg.delta_f);
            let aa = &a * a.adjoint();
            let bb = &b * b.adjoint();
            c += bb.kronecker(&aa) * C64::new(p.gamma, 0.0);
        }
        c
    }

    #[test]
    fn scalar_case() {
        let cfg = small(1, 1);
        let geo = ChannelGeometry {
            paths: vec![PathParams {
                theta: 0.4,
                tau: 1e-6,
                gamma: 1.0,
            }],
        };
        let cov = build_covariance(&geo, &cfg).unwrap();
        assert!((cov.to_dense()[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert_eq!(cov.rank(), 1);
    }

    #[test]
    fn matches_definition_and_trace() {
        let cfg = small(8, 4);
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for l in [1, 3, 6, 40] {
            let geo = sample_geometry(&mut rng, l, &cfg).unwrap();
            let cov = build_covariance(&geo, &cfg).unwrap();
            let dense = explicit(&geo, &cfg);
            assert!((cov.to_dense() - &dense).norm() < 1e-10 * dense.norm());
            assert!((cov.trace() - 32.0).abs() < 1e-8 * 32.0);
            assert_eq!(cov.rank(), l.min(32));
        }
    }

    #[test]
    fn two_path_eigenvalues_match_dense_solver() {
        let cfg = small(2, 1);
        let geo = ChannelGeometry {
            paths: vec![
                PathParams {
                    theta: 0.1,
                    tau: 0.0,
                    gamma: 0.3,
                },
                PathParams {
                    theta: -0.7,
                    tau: 0.0,
                    gamma: 0.7,
                },
            ],
        };
        let cov = build_covariance(&geo, &cfg).unwrap();
        let dense = hermitian_eig(&explicit(&geo, &cfg)).unwrap();
        assert_eq!(cov.rank(), 2);
        for i in 0..2 {
            assert!((cov.eigenvalues()[i] - dense.values[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn single_path_signature_is_eigenvector() {
        let cfg = small(4, 3);
        let p = PathParams {
            theta: 0.5,
            tau: 2e-6,
            gamma: 1.0,
        };
        let cov = build_covariance(&ChannelGeometry { paths: vec![p] }, &cfg).unwrap();
        let v = path_signature(&p, &cfg);
        let cv = cov.to_dense() * &v;
        assert!((cv - &v * C64::new(12.0, 0.0)).norm() < 1e-10);
        assert!((cov.eigenvalues()[0] - 12.0).abs() < 1e-10);
    }

    #[test]
    fn subcarrier_blocks_are_diagonal_blocks() {
        let cfg = small(3, 4);
        let geo = sample_geometry(&mut ChaCha12Rng::seed_from_u64(6), 2, &cfg).unwrap();
        let cov = build_covariance(&geo, &cfg).unwrap();
        let dense = cov.to_dense();
        for sc in 0..4 {
            let block = dense.view((sc * 3, sc * 3), (3, 3));
            assert!((cov.subcarrier_block(sc) - block).norm() < 1e-12);
        }
    }
}
