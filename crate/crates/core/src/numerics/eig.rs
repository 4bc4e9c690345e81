use nalgebra::linalg::{SymmetricEigen, SVD};

use super::{check_hermitian, hermitian_part, CMat, PSD_CLAMP_TOL, RANK_REL_TOL};
use crate::{Error, Result};

/// Eigendecomposition of a Hermitian matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Unitary; column `i` belongs to `values[i]`.
    pub vectors: CMat,
}

impl HermitianEigen {
    pub fn reconstruct(&self) -> CMat {
        let mut scaled = self.vectors.clone();
        for (j, &v) in self.values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(v);
        }
        &scaled * self.vectors.adjoint()
    }
}

/// Rotate each column so its first non-negligible entry is real and positive.
fn fix_phases(vectors: &mut CMat) {
    for mut col in vectors.column_iter_mut() {
        let norm = col.norm();
        if norm == 0.0 {
            continue;
        }
        if let Some(pivot) = col.iter().find(|z| z.norm() > 1e-8 * norm).copied() {
            let rot = pivot.conj() / pivot.norm();
            for z in col.iter_mut() {
                *z *= rot;
            }
        }
    }
}

fn sorted_descending(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    order
}

/// Hermitian eigendecomposition with deterministic ordering and phases.
pub fn hermitian_eig(a: &CMat) -> Result<HermitianEigen> {
    check_hermitian(a)?;
    let n = a.nrows();
    if n == 0 {
        return Ok(HermitianEigen {
            values: vec![],
            vectors: CMat::zeros(0, 0),
        });
    }
    let eig = SymmetricEigen::try_new(hermitian_part(a), f64::EPSILON, 0)
        .ok_or(Error::NoConvergence("Hermitian eigensolver"))?;
    let raw: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let order = sorted_descending(&raw);
    let values = order.iter().map(|&i| raw[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    fix_phases(&mut vectors);
    Ok(HermitianEigen { values, vectors })
}

/// Nonnegative descending spectrum of a PSD operator, optionally with its
/// orthonormal eigenbasis.
#[derive(Debug, Clone)]
pub struct Spectrum {
    values: Vec<f64>,
    basis: Option<CMat>,
}

fn clamp_psd(values: &mut [f64]) -> Result<()> {
    let largest = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for v in values.iter_mut() {
        if *v < 0.0 {
            if *v < -PSD_CLAMP_TOL * largest {
                return Err(Error::Indefinite {
                    eigenvalue: *v,
                    largest,
                });
            }
            *v = 0.0;
        }
    }
    Ok(())
}

impl Spectrum {
    /// Sorts descending; negative round-off is clamped to zero.
    pub fn from_values(values: impl Into<Vec<f64>>) -> Result<Self> {
        let mut values = values.into();
        clamp_psd(&mut values)?;
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(Spectrum {
            values,
            basis: None,
        })
    }

    pub fn of_psd(a: &CMat) -> Result<Self> {
        let HermitianEigen {
            mut values,
            vectors,
        } = hermitian_eig(a)?;
        clamp_psd(&mut values)?;
        Ok(Spectrum {
            values,
            basis: Some(vectors),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn basis(&self) -> Option<&CMat> {
        self.basis.as_ref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn largest(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn trace(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn rank(&self) -> usize {
        let cut = RANK_REL_TOL * self.largest();
        self.values.iter().filter(|&&v| v > cut && v > 0.0).count()
    }
}

/// Spectrum of `G G^H` from its factor `G` through an SVD, which keeps small
/// eigenvalues accurate to `ε‖G‖²` instead of `ε‖G G^H‖`.
pub fn spectrum_from_factor(g: &CMat) -> Result<Spectrum> {
    let (rows, cols) = g.shape();
    if rows == 0 {
        return Ok(Spectrum {
            values: vec![],
            basis: Some(CMat::zeros(0, 0)),
        });
    }
    if cols == 0 {
        return Ok(Spectrum {
            values: vec![],
            basis: Some(CMat::zeros(rows, 0)),
        });
    }
    let svd =
        SVD::try_new(g.clone(), true, false, f64::EPSILON, 0).ok_or(Error::NoConvergence("SVD"))?;
    let u = svd.u.expect("left singular vectors requested");
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let order = sorted_descending(&sv);
    let mut basis = CMat::zeros(rows, order.len());
    for (dst, &src) in order.iter().enumerate() {
        basis.set_column(dst, &u.column(src));
    }
    fix_phases(&mut basis);
    let values = order.iter().map(|&i| sv[i] * sv[i]).collect();
    Ok(Spectrum {
        values,
        basis: Some(basis),
    })
}

/// Moore-Penrose inverse of a PSD matrix, inverting only eigenvalues above
/// `rel_tol * λ_max`.
pub fn psd_pinv(a: &CMat, rel_tol: f64) -> Result<CMat> {
    let spec = Spectrum::of_psd(a)?;
    let basis = spec.basis().expect("of_psd keeps the basis");
    let cut = rel_tol * spec.largest();
    let n = a.nrows();
    let mut out = CMat::zeros(n, n);
    for (j, &v) in spec.values().iter().enumerate() {
        if v > cut && v > 0.0 {
            let col = basis.column(j);
            out += (col * col.adjoint()).scale(1.0 / v);
        }
    }
    Ok(out)
}
