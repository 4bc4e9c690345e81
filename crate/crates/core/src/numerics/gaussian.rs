use rand::Rng;
use rand_distr::StandardNormal;

use super::{spectrum_from_factor, CMat, CVec, Spectrum, C64};
use crate::Result;

/// One draw from `CN(0, var)`: independent real and imaginary parts, each
/// with variance `var / 2`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, var: f64) -> C64 {
    let s = (0.5 * var).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

/// `len` i.i.d. `CN(0, var)` entries.
pub fn cn_vector<R: Rng + ?Sized>(rng: &mut R, len: usize, var: f64) -> CVec {
    CVec::from_iterator(len, (0..len).map(|_| complex_normal(rng, var)))
}

/// Draws `x ~ CN(0, F F^H)` as `x = F w` with white `w`.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    factor: CMat,
}

impl GaussianSampler {
    /// Factor a PSD covariance through its eigendecomposition
    /// (`C^{1/2} = U Λ^{1/2}`, zero modes dropped).
    pub fn new(cov: &CMat) -> Result<Self> {
        let spec = Spectrum::of_psd(cov)?;
        let basis = spec.basis().expect("of_psd keeps the basis");
        let keep = spec.values().iter().take_while(|&&v| v > 0.0).count();
        let mut factor = CMat::zeros(cov.nrows(), keep);
        for j in 0..keep {
            let s = spec.values()[j].sqrt();
            factor.set_column(j, &basis.column(j).map(|z| z * s));
        }
        Ok(GaussianSampler { factor })
    }

    pub fn from_factor(factor: CMat) -> Self {
        GaussianSampler { factor }
    }

    /// Compress a wide factor to at most `rows` columns without changing `F F^H`.
    pub fn compact(factor: &CMat) -> Result<Self> {
        if factor.ncols() <= factor.nrows() {
            return Ok(GaussianSampler {
                factor: factor.clone(),
            });
        }
        let spec = spectrum_from_factor(factor)?;
        let basis = spec.basis().expect("factor spectrum keeps the basis");
        let mut f = CMat::zeros(factor.nrows(), spec.len());
        for (j, &v) in spec.values().iter().enumerate() {
            f.set_column(j, &basis.column(j).map(|z| z * v.sqrt()));
        }
        Ok(GaussianSampler { factor: f })
    }

    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    pub fn factor(&self) -> &CMat {
        &self.factor
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> CVec {
        let w = cn_vector(rng, self.factor.ncols(), 1.0);
        &self.factor * w
    }
}

/// One draw from `CN(0, C)`.
pub fn sample_from_covariance<R: Rng + ?Sized>(cov: &CMat, rng: &mut R) -> Result<CVec> {
    Ok(GaussianSampler::new(cov)?.sample(rng))
}
