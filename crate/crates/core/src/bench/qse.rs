//! Empirical quality-scaling exponent: the high-SNR decay rate of the NMSE.

use crate::model::to_db;
use crate::numerics::mean_and_se;
use crate::schemes::SchemeId;
use crate::{Error, Result};

use super::record::{Metric, SweepRecord};
use super::spec::{ExperimentKind, ExperimentSpec};
use super::sweep::{evaluate, SweepResult};

/// Least-squares slope of `ys` against `xs`. Needs three distinct abscissae.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Dimension(format!(
            "{} abscissae for {} ordinates",
            xs.len(),
            ys.len()
        )));
    }
    let mut distinct = xs.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::TooFewPoints(distinct.len()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Negated slope of NMSE (dB) against SNR (dB) over `window`, inclusive.
///
/// `records` must hold finite `nmse_dB` rows of a single scheme; rows of
/// other metrics are ignored.
pub fn estimate_qse_slope(records: &[SweepRecord], window: (f64, f64)) -> Result<f64> {
    let rows: Vec<&SweepRecord> = records
        .iter()
        .filter(|r| {
            r.metric == Metric::NmseDb && r.snr_dl_db >= window.0 && r.snr_dl_db <= window.1
        })
        .filter(|r| r.value.is_finite())
        .collect();
    if let Some(r) = rows.iter().find(|r| r.scheme != rows[0].scheme) {
        return Err(Error::Config(format!(
            "records mix schemes {} and {}",
            rows[0].scheme, r.scheme
        )));
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.snr_dl_db).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.value).collect();
    Ok(-least_squares_slope(&xs, &ys)?)
}

/// Per-geometry QSE fits of one scheme at one `(L, β_fb, K)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QseFit {
    pub scheme: SchemeId,
    pub paths: usize,
    pub beta_fb: usize,
    pub k: usize,
    /// Fitted exponent per geometry that had a full SNR window.
    pub slopes: Vec<f64>,
    /// SNR window of the fit, in dB.
    pub window: (f64, f64),
}

/// Fit the QSE of every scheme and `(β_fb, K)` on each geometry separately.
pub fn qse_fits(result: &SweepResult) -> Result<Vec<QseFit>> {
    let spec = &result.spec;
    let lo = spec.snr_db.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = spec
        .snr_db
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let mut fits = Vec::new();
    for k in spec.user_grid() {
        for &beta_fb in &spec.beta_fb {
            for &scheme in &spec.schemes {
                let cells: Vec<_> = result
                    .cells
                    .iter()
                    .filter(|c| c.metric == Metric::NmseDb && c.scheme == scheme)
                    .filter(|c| c.point.k == k && c.point.beta_fb == beta_fb)
                    .collect();
                let mut slopes = Vec::new();
                for g in 0..spec.n_geometries {
                    let pts: Vec<(f64, f64)> = cells
                        .iter()
                        .filter_map(|c| {
                            c.samples[g]
                                .as_ref()
                                .ok()
                                .map(|e| (c.point.snr_db, to_db(e.value)))
                        })
                        .filter(|(_, y)| y.is_finite())
                        .collect();
                    if pts.len() < cells.len() {
                        continue;
                    }
                    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
                    slopes.push(-least_squares_slope(&xs, &ys)?);
                }
                fits.push(QseFit {
                    scheme,
                    paths: spec.paths,
                    beta_fb,
                    k,
                    slopes,
                    window: (lo, hi),
                });
            }
        }
    }
    Ok(fits)
}

/// NMSE rows over the SNR window, followed by one `qse_slope` row per
/// scheme and `β_fb`: the mean per-geometry exponent and its standard error.
/// Slope rows carry the top of the window as their SNR.
pub fn run_qse(spec: &ExperimentSpec) -> Result<Vec<SweepRecord>> {
    let spec = ExperimentSpec {
        kind: ExperimentKind::Qse,
        ..spec.clone()
    };
    let result = evaluate(&spec)?;
    let mut rows = result.records();
    for fit in qse_fits(&result)? {
        let (value, std_error) = mean_and_se(&fit.slopes);
        let skipped = spec.n_geometries - fit.slopes.len();
        let mut note = format!("window:{}..{}", fit.window.0, fit.window.1);
        if skipped > 0 {
            note.push_str(&format!(";incomplete:{skipped}/{}", spec.n_geometries));
        }
        rows.push(SweepRecord {
            scheme: fit.scheme,
            l: fit.paths,
            beta_fb: fit.beta_fb,
            k: fit.k,
            snr_dl_db: fit.window.1,
            metric: Metric::QseSlope,
            value,
            std_error,
            n_geometries: fit.slopes.len(),
            seed: spec.master_seed,
            note,
        });
    }
    Ok(rows)
}
