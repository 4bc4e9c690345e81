//! Sweep execution.
//!
//! A sweep is a grid of [`GridPoint`]s evaluated on `n_geometries`
//! independent geometry draws. Each (geometry, grid point) pair is one work
//! unit; units run in parallel and are reduced in grid order.

use std::collections::BTreeSet;

use crate::model::{
    build_covariance, from_db, sample_geometry, to_db, ChannelCovariance, PilotMatrix, SystemConfig,
};
use crate::numerics::mean_and_se;
use crate::rates::{
    average_sum_rate, rate_upper_bound, uatf_mrt, uatf_zf, zf_moments, Precoder, SubcarrierStats,
    UserRates,
};
use crate::schemes::{
    dr_output, ecsq_output, ljscc_build, tkl_build, user_mmse, FeedbackBudget, SchemeId,
    SchemeOutput, UserMmse,
};
use crate::{Error, Result};

use super::exec::map_units;
use super::record::{Metric, SweepRecord};
use super::seed::{Purpose, StreamKey};
use super::spec::{ExperimentKind, ExperimentSpec, TABLE1_SETTINGS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub paths: usize,
    pub beta_fb: usize,
    pub k: usize,
    pub snr_db: f64,
}

/// Grid of an experiment, `K`-major, then `β_fb`, then SNR.
pub fn grid(spec: &ExperimentSpec) -> Vec<GridPoint> {
    if spec.kind == ExperimentKind::Table1 {
        let k = spec.system.k;
        let snr_db = TABLE1_PILOT_SNR_DB;
        return TABLE1_SETTINGS
            .iter()
            .map(|&(paths, beta_fb)| GridPoint {
                paths,
                beta_fb,
                k,
                snr_db,
            })
            .collect();
    }
    let mut out = Vec::new();
    for k in spec.user_grid() {
        for &beta_fb in &spec.beta_fb {
            for &snr_db in &spec.snr_db {
                out.push(GridPoint {
                    paths: spec.paths,
                    beta_fb,
                    k,
                    snr_db,
                });
            }
        }
    }
    out
}

/// DL SNR of the direct channel observation in the idealized setting, high
/// enough that the user-side error sits far below double-precision round-off
/// of the BS estimate.
pub const TABLE1_PILOT_SNR_DB: f64 = 200.0;

/// Metrics reported for every scheme of this experiment.
pub fn metrics(spec: &ExperimentSpec, scheme: SchemeId) -> Vec<Metric> {
    let nmse = scheme != SchemeId::Perfect;
    match spec.kind {
        ExperimentKind::Nmse | ExperimentKind::Qse | ExperimentKind::Table1 => vec![Metric::NmseDb],
        ExperimentKind::Rate => {
            let mut m = vec![Metric::UatfMrt, Metric::UatfZf];
            if spec.upper_bound {
                m.extend([Metric::RateUbMrt, Metric::RateUbZf]);
            }
            m
        }
        ExperimentKind::Users => {
            let mut m = if nmse {
                vec![Metric::NmseDb]
            } else {
                Vec::new()
            };
            m.push(Metric::UatfZf);
            if spec.upper_bound {
                m.push(Metric::RateUbZf);
            }
            m
        }
    }
}

/// System configuration at a grid point. The UL detector efficiency
/// follows `K` in a user sweep.
pub fn point_config(spec: &ExperimentSpec, p: &GridPoint) -> SystemConfig {
    let mut cfg = spec.system.clone();
    cfg.k = p.k;
    cfg.snr_dl = from_db(p.snr_db);
    if spec.kind == ExperimentKind::Users {
        cfg.kappa = 1.0 - p.k as f64 / cfg.m as f64;
    }
    cfg
}

/// A value from one geometry, with its Monte-Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

/// Per-geometry outcome; `Err` holds the machine-readable skip reason.
pub type Sample = std::result::Result<Estimate, String>;

/// All geometries of one (grid point, scheme, metric).
///
/// NMSE samples are linear; rate samples are average sum rates.
#[derive(Debug, Clone)]
pub struct Cell {
    pub point: GridPoint,
    pub scheme: SchemeId,
    pub metric: Metric,
    pub samples: Vec<Sample>,
}

impl Cell {
    pub fn values(&self) -> Vec<f64> {
        self.samples
            .iter()
            .filter_map(|s| s.as_ref().ok().map(|e| e.value))
            .collect()
    }

    fn note(&self) -> String {
        let reasons: BTreeSet<&str> = self
            .samples
            .iter()
            .filter_map(|s| s.as_ref().err().map(String::as_str))
            .collect();
        reasons
            .iter()
            .map(|r| {
                let n = self
                    .samples
                    .iter()
                    .filter(|s| s.as_ref().err().map(String::as_str) == Some(r))
                    .count();
                format!("{r}:{n}/{}", self.samples.len())
            })
            .collect::<Vec<_>>()
            .join(";")
    }

    /// Mean over geometries. The standard error is taken across geometries,
    /// or from the Monte-Carlo error when only one geometry contributed.
    pub fn record(&self, seed: u64) -> SweepRecord {
        let ok: Vec<Estimate> = self
            .samples
            .iter()
            .filter_map(|s| s.as_ref().ok().copied())
            .collect();
        let (mut value, mut se) = match ok.len() {
            0 => (f64::NAN, f64::NAN),
            1 => (ok[0].value, ok[0].std_error),
            _ => mean_and_se(&self.values()),
        };
        if self.metric == Metric::NmseDb {
            se *= 10.0 / std::f64::consts::LN_10 / value;
            value = to_db(value);
        }
        SweepRecord {
            scheme: self.scheme,
            l: self.point.paths,
            beta_fb: self.point.beta_fb,
            k: self.point.k,
            snr_dl_db: self.point.snr_db,
            metric: self.metric,
            value,
            std_error: se,
            n_geometries: ok.len(),
            seed,
            note: self.note(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub spec: ExperimentSpec,
    /// Grid-major, scheme-minor, then metric.
    pub cells: Vec<Cell>,
}

impl SweepResult {
    pub fn records(&self) -> Vec<SweepRecord> {
        self.cells
            .iter()
            .map(|c| c.record(self.spec.master_seed))
            .collect()
    }

    pub fn find(&self, point: &GridPoint, scheme: SchemeId, metric: Metric) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.point == *point && c.scheme == scheme && c.metric == metric)
    }
}

/// Channel statistics of one geometry draw for one path count.
struct GeometryContext {
    covs: Vec<ChannelCovariance>,
    /// Unit-power pilots, scaled per SNR.
    pilots: PilotMatrix,
}

fn geometry_context(
    spec: &ExperimentSpec,
    g: usize,
    paths: usize,
    users: usize,
) -> Result<GeometryContext> {
    let cfg = &spec.system;
    let covs = (0..users)
        .map(|u| {
            let mut rng = StreamKey::new(Purpose::Geometry, g)
                .index(u)
                .grid(paths)
                .rng(spec.master_seed);
            build_covariance(&sample_geometry(&mut rng, paths, cfg)?, cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let pilots = PilotMatrix::unit(
        cfg,
        &mut StreamKey::new(Purpose::Pilots, g).rng(spec.master_seed),
    )?;
    Ok(GeometryContext { covs, pilots })
}

/// Evaluate every (geometry, grid point) of `spec`.
pub fn evaluate(spec: &ExperimentSpec) -> Result<SweepResult> {
    spec.validate()?;
    let points = grid(spec);
    let paths: Vec<usize> = points
        .iter()
        .map(|p| p.paths)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let users = points.iter().map(|p| p.k).max().unwrap_or(0);
    let n_geo = spec.n_geometries;

    let contexts = map_units(n_geo * paths.len(), spec.threads, |i| {
        geometry_context(spec, i / paths.len(), paths[i % paths.len()], users)
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let n_points = points.len();
    let units = map_units(n_geo * n_points, spec.threads, |i| {
        let (g, pi) = (i / n_points, i % n_points);
        let point = &points[pi];
        let li = paths
            .iter()
            .position(|&l| l == point.paths)
            .expect("path count in grid");
        evaluate_unit(spec, &contexts[g * paths.len() + li], g, pi, point)
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut cells = Vec::new();
    for (pi, point) in points.iter().enumerate() {
        for (si, &scheme) in spec.schemes.iter().enumerate() {
            for (mi, &metric) in metrics(spec, scheme).iter().enumerate() {
                let samples = (0..n_geo)
                    .map(|g| units[g * n_points + pi][si][mi].clone())
                    .collect();
                cells.push(Cell {
                    point: *point,
                    scheme,
                    metric,
                    samples,
                });
            }
        }
    }
    Ok(SweepResult {
        spec: spec.clone(),
        cells,
    })
}

/// Samples of one work unit, indexed `[scheme][metric]`.
fn evaluate_unit(
    spec: &ExperimentSpec,
    ctx: &GeometryContext,
    g: usize,
    pi: usize,
    point: &GridPoint,
) -> Result<Vec<Vec<Sample>>> {
    let cfg = point_config(spec, point);
    let pilots = if spec.kind == ExperimentKind::Table1 {
        PilotMatrix::direct(cfg.m, cfg.n, cfg.snr_dl)
    } else {
        ctx.pilots.scaled(cfg.snr_dl.sqrt())
    };
    let covs = &ctx.covs[..point.k];
    let mmse = covs
        .iter()
        .map(|c| user_mmse(c, &pilots))
        .collect::<Result<Vec<_>>>()?;
    let budget = if spec.kind == ExperimentKind::Table1 {
        FeedbackBudget::new(point.beta_fb, from_db(spec.snr_ul_db), cfg.kappa, cfg.m)?
    } else {
        FeedbackBudget::from_config(point.beta_fb, &cfg)?
    };

    let mut out = Vec::with_capacity(spec.schemes.len());
    for &scheme in &spec.schemes {
        let wanted = metrics(spec, scheme);
        let outputs = match scheme_outputs(spec, scheme, covs, &mmse, &budget, g) {
            Ok(o) => o,
            Err(e @ Error::Infeasible(_)) => {
                out.push(vec![Err(e.kind().to_string()); wanted.len()]);
                continue;
            }
            Err(e) => return Err(e),
        };
        let rates = RateRun {
            spec,
            cfg: &cfg,
            outputs: &outputs,
            key: (g, pi, scheme),
        }
        .run(&wanted)?;
        let samples = wanted
            .iter()
            .map(|m| match m {
                Metric::NmseDb => {
                    let nmse: f64 =
                        outputs.iter().map(SchemeOutput::nmse).sum::<f64>() / outputs.len() as f64;
                    Ok(Estimate {
                        value: nmse,
                        std_error: 0.0,
                    })
                }
                m => rates.get(*m),
            })
            .collect();
        out.push(samples);
    }
    Ok(out)
}

/// What the BS knows about each user under `scheme`.
pub fn scheme_outputs(
    spec: &ExperimentSpec,
    scheme: SchemeId,
    covs: &[ChannelCovariance],
    mmse: &[UserMmse],
    budget: &FeedbackBudget,
    g: usize,
) -> Result<Vec<SchemeOutput>> {
    covs.iter()
        .zip(mmse)
        .enumerate()
        .map(|(u, (cov, m))| match scheme {
            SchemeId::Dr => Ok(dr_output(m, budget)?.output()),
            SchemeId::Ecsq => Ok(ecsq_output(m, budget)?.output()),
            SchemeId::Ljscc => {
                let mut rng = StreamKey::new(Purpose::Spreading, g)
                    .index(u)
                    .grid(budget.beta_fb)
                    .rng(spec.master_seed);
                Ok(ljscc_build(m, budget, &mut rng)?.output())
            }
            SchemeId::Tkl => Ok(tkl_build(m, budget)?.output()),
            SchemeId::Perfect => Ok(SchemeOutput::perfect(cov)),
        })
        .collect()
}

/// Average sum rates of one scheme at one work unit.
struct RateRun<'a> {
    spec: &'a ExperimentSpec,
    cfg: &'a SystemConfig,
    outputs: &'a [SchemeOutput],
    key: (usize, usize, SchemeId),
}

/// Per-subcarrier rates, or the reason they are missing.
struct RateSeries {
    per_sc: Vec<Vec<f64>>,
    se2: Vec<f64>,
    failure: Option<String>,
}

impl RateSeries {
    fn new(n: usize) -> Self {
        RateSeries {
            per_sc: Vec::with_capacity(n),
            se2: Vec::with_capacity(n),
            failure: None,
        }
    }

    fn push(&mut self, r: UserRates) {
        self.se2.push(r.sum_std_error * r.sum_std_error);
        self.per_sc.push(r.rates);
    }

    fn fail(&mut self, reason: String) {
        self.failure.get_or_insert(reason);
    }
}

struct RateTable {
    series: Vec<(Metric, RateSeries)>,
    weights: Vec<f64>,
    cfg: SystemConfig,
}

impl RateTable {
    fn get(&self, metric: Metric) -> Sample {
        let (_, s) = self
            .series
            .iter()
            .find(|(m, _)| *m == metric)
            .expect("metric was evaluated");
        if let Some(f) = &s.failure {
            return Err(f.clone());
        }
        let value = average_sum_rate(&s.per_sc, &self.cfg);
        let var: f64 = s
            .se2
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| w * w * v)
            .sum();
        Ok(Estimate {
            value,
            std_error: var.sqrt(),
        })
    }
}

/// ZF rejections become skip reasons; anything else is a hard error.
fn soft<T>(r: Result<T>) -> Result<std::result::Result<T, String>> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(e @ Error::ZfRejection { .. }) => Ok(Err(e.kind().to_string())),
        Err(e) => Err(e),
    }
}

impl RateRun<'_> {
    fn rng(&self, purpose: Purpose, sc: usize) -> rand_chacha::ChaCha12Rng {
        let (g, pi, scheme) = self.key;
        StreamKey::new(purpose, g)
            .index(sc)
            .scheme(scheme)
            .grid(pi)
            .rng(self.spec.master_seed)
    }

    fn run(&self, wanted: &[Metric]) -> Result<RateTable> {
        let n = self.cfg.n;
        let rate_metrics: Vec<Metric> = wanted
            .iter()
            .copied()
            .filter(|m| *m != Metric::NmseDb)
            .collect();
        let mut series: Vec<(Metric, RateSeries)> = rate_metrics
            .iter()
            .map(|&m| (m, RateSeries::new(n)))
            .collect();
        let needs_zf = rate_metrics
            .iter()
            .any(|m| matches!(m, Metric::UatfZf | Metric::RateUbZf));
        let snr = self.cfg.snr_dl;
        for sc in 0..n {
            if rate_metrics.is_empty() {
                break;
            }
            let stats = SubcarrierStats::from_outputs(self.outputs, sc)?;
            let moments = if needs_zf {
                Some(soft(zf_moments(
                    &stats,
                    self.spec.mc_samples,
                    &mut self.rng(Purpose::ZfMoments, sc),
                ))?)
            } else {
                None
            };
            for (metric, s) in series.iter_mut() {
                if s.failure.is_some() {
                    continue;
                }
                let r = match metric {
                    Metric::UatfMrt => Ok(uatf_mrt(&stats, snr)),
                    Metric::RateUbMrt => {
                        let mut rng = self.rng(Purpose::UpperBoundMrt, sc);
                        soft(rate_upper_bound(
                            &stats,
                            Precoder::Mrt,
                            snr,
                            self.spec.n_realizations,
                            &mut rng,
                        ))?
                    }
                    Metric::UatfZf | Metric::RateUbZf => {
                        match moments.as_ref().expect("zf moments drawn") {
                            Err(reason) => Err(reason.clone()),
                            Ok(mom) if *metric == Metric::UatfZf => Ok(uatf_zf(&stats, mom, snr)),
                            Ok(mom) => {
                                let mut rng = self.rng(Purpose::UpperBoundZf, sc);
                                let n = self.spec.n_realizations;
                                soft(rate_upper_bound(
                                    &stats,
                                    Precoder::Zf(mom),
                                    snr,
                                    n,
                                    &mut rng,
                                ))?
                            }
                        }
                    }
                    Metric::NmseDb | Metric::QseSlope => unreachable!("not a rate metric"),
                };
                match r {
                    Ok(r) => s.push(r),
                    Err(reason) => s.fail(reason),
                }
            }
        }
        Ok(RateTable {
            series,
            weights: crate::rates::subcarrier_weights(self.cfg),
            cfg: self.cfg.clone(),
        })
    }
}

pub fn run_nmse_sweep(spec: &ExperimentSpec) -> Result<Vec<SweepRecord>> {
    Ok(evaluate(&with_kind(spec, ExperimentKind::Nmse))?.records())
}

pub fn run_rate_sweep(spec: &ExperimentSpec) -> Result<Vec<SweepRecord>> {
    Ok(evaluate(&with_kind(spec, ExperimentKind::Rate))?.records())
}

pub fn run_user_sweep(spec: &ExperimentSpec) -> Result<Vec<SweepRecord>> {
    Ok(evaluate(&with_kind(spec, ExperimentKind::Users))?.records())
}

/// NMSE of the four schemes in the idealized setting: the user observes
/// its channel directly at [`TABLE1_PILOT_SNR_DB`], so its own estimate is
/// exact to working precision, and the UL runs at `snr_ul_db`.
pub fn run_table1(spec: &ExperimentSpec) -> Result<Vec<SweepRecord>> {
    Ok(evaluate(&with_kind(spec, ExperimentKind::Table1))?.records())
}

fn with_kind(spec: &ExperimentSpec, kind: ExperimentKind) -> ExperimentSpec {
    ExperimentSpec {
        kind,
        ..spec.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::spec::Preset;

    fn tiny(kind: ExperimentKind) -> ExperimentSpec {
        let mut s = ExperimentSpec::preset(kind, Preset::Fast);
        s.system.m = 8;
        s.system.n = 8;
        s.system.k = 2;
        s.system.kappa = 0.75;
        s.system.t_p = 4;
        s.system.pilot_subcarriers = vec![1, 5];
        s.paths = 2;
        s.n_geometries = 2;
        s.mc_samples = 200;
        s.n_realizations = 100;
        s.snr_db = vec![0.0, 10.0];
        s
    }

    #[test]
    fn grid_order() {
        let mut s = tiny(ExperimentKind::Users);
        s.users = vec![1, 2];
        s.beta_fb = vec![3, 4];
        let g = grid(&s);
        assert_eq!(g.len(), 8);
        assert_eq!((g[0].k, g[0].beta_fb, g[0].snr_db), (1, 3, 0.0));
        assert_eq!((g[1].k, g[1].beta_fb, g[1].snr_db), (1, 3, 10.0));
        assert_eq!((g[2].k, g[2].beta_fb), (1, 4));
        assert_eq!(g[4].k, 2);
        let t = grid(&ExperimentSpec::preset(
            ExperimentKind::Table1,
            Preset::Fast,
        ));
        assert_eq!(
            t.iter().map(|p| (p.paths, p.beta_fb)).collect::<Vec<_>>(),
            TABLE1_SETTINGS.to_vec()
        );
        assert_eq!(t[0].snr_db, TABLE1_PILOT_SNR_DB);
    }

    #[test]
    fn nmse_rows_in_order() {
        let s = tiny(ExperimentKind::Nmse);
        let rows = run_nmse_sweep(&s).unwrap();
        assert_eq!(rows.len(), 2 * 4);
        assert_eq!(rows[0].scheme, SchemeId::Dr);
        assert_eq!(rows[3].scheme, SchemeId::Tkl);
        assert_eq!(rows[4].snr_dl_db, 10.0);
        for r in &rows {
            assert!(r.value < 0.0 && r.value > -60.0, "{r:?}");
            assert_eq!(r.n_geometries, 2);
            assert!(r.std_error >= 0.0);
            assert!(r.note.is_empty());
        }
    }

    #[test]
    fn zero_feedback_is_prior() {
        let mut s = tiny(ExperimentKind::Nmse);
        s.beta_fb = vec![0];
        for r in run_nmse_sweep(&s).unwrap() {
            assert!(r.value.abs() < 1e-9, "{r:?}");
        }
    }

    #[test]
    fn infeasible_tkl_skipped() {
        let mut s = tiny(ExperimentKind::Nmse);
        s.beta_fb = vec![9];
        s.snr_db = vec![10.0];
        let rows = run_nmse_sweep(&s).unwrap();
        let tkl = rows.iter().find(|r| r.scheme == SchemeId::Tkl).unwrap();
        assert!(tkl.value.is_nan());
        assert_eq!(tkl.n_geometries, 0);
        assert_eq!(tkl.note, "infeasible:2/2");
        assert!(rows
            .iter()
            .filter(|r| r.scheme != SchemeId::Tkl)
            .all(|r| r.value.is_finite()));
    }

    #[test]
    fn rate_rows() {
        let mut s = tiny(ExperimentKind::Rate);
        s.snr_db = vec![10.0];
        let rows = run_rate_sweep(&s).unwrap();
        assert_eq!(rows.len(), 5 * 4);
        let get = |sch, m| {
            rows.iter()
                .find(|r| r.scheme == sch && r.metric == m)
                .unwrap()
                .value
        };
        for sch in SchemeId::FEEDBACK {
            assert!(get(SchemeId::Perfect, Metric::UatfMrt) >= get(sch, Metric::UatfMrt));
        }
        for r in &rows {
            assert!(r.value.is_finite() && r.value >= 0.0, "{r:?}");
        }
    }

    #[test]
    fn user_sweep_to_full_load() {
        let mut s = tiny(ExperimentKind::Users);
        s.users = vec![1, 8];
        s.snr_db = vec![10.0];
        s.schemes = vec![SchemeId::Tkl];
        let rows = run_user_sweep(&s).unwrap();
        let at = |k, m| {
            rows.iter()
                .find(|r| r.k == k && r.metric == m)
                .unwrap()
                .value
        };
        assert!(at(1, Metric::UatfZf) > 0.0);
        assert!(at(8, Metric::NmseDb).abs() < 1e-9);
        assert_eq!(at(8, Metric::UatfZf), 0.0);
    }

    #[test]
    fn thread_count_does_not_matter() {
        let mut s = tiny(ExperimentKind::Rate);
        s.snr_db = vec![0.0];
        s.threads = Some(1);
        let a = run_rate_sweep(&s).unwrap();
        s.threads = Some(3);
        let b = run_rate_sweep(&s).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }
}
