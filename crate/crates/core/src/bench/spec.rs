//! Experiment descriptions: presets, TOML config files and validation.
//!
//! A config file has two optional sections. Every key is optional and
//! overrides the preset it is applied to:
//!
//! ```toml
//! [experiment]
//! preset = "fast"            # or "paper"
//! paths = 6                  # L
//! beta_fb = [3, 10]          # feedback channel uses
//! snr_db = [-10, 0, 10]      # DL SNR grid
//! users = [1, 2, 4]          # K grid (user sweep only)
//! schemes = ["dr", "tkl"]
//! geometries = 10
//! realizations = 1000        # upper-bound samples per subcarrier
//! mc_samples = 10000         # ZF moment samples per subcarrier
//! seed = 1
//! upper_bound = true
//! snr_ul_db = 100            # Table I uplink SNR
//! threads = 4
//!
//! [system]
//! m = 32
//! n = 32
//! k = 6
//! delta_f = 30e3
//! tau_max = 7e-6
//! t = 25
//! t_p = 8
//! pilot_subcarriers = [2, 6, 10, 14, 18, 22, 26, 30]
//! kappa = 0.8125             # defaults to 1 - K/M
//! ```

use std::fmt;
use std::str::FromStr;

use serde::Deserialize;

use crate::model::{comb_subcarriers, SystemConfig};
use crate::schemes::SchemeId;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    Nmse,
    Rate,
    Users,
    Qse,
    Table1,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Nmse => "nmse-sweep",
            ExperimentKind::Rate => "rate-sweep",
            ExperimentKind::Users => "user-sweep",
            ExperimentKind::Qse => "qse",
            ExperimentKind::Table1 => "table1",
        }
    }

    /// Whether the experiment reports NMSE, which the perfect-CSI reference lacks.
    fn nmse_only(self) -> bool {
        matches!(
            self,
            ExperimentKind::Nmse | ExperimentKind::Qse | ExperimentKind::Table1
        )
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Fast,
    Paper,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fast" => Ok(Preset::Fast),
            "paper" => Ok(Preset::Paper),
            _ => Err(Error::Parse(format!(
                "unknown preset '{s}' (expected fast or paper)"
            ))),
        }
    }
}

/// The `(L, β_fb)` settings of the idealized comparison table.
pub const TABLE1_SETTINGS: [(usize, usize); 4] = [(6, 3), (6, 10), (60, 30), (60, 64)];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    /// Base system; `snr_dl` is taken from the grid and `k` from `users`
    /// in a user sweep.
    pub system: SystemConfig,
    /// Paths per user (`L`).
    pub paths: usize,
    pub beta_fb: Vec<usize>,
    pub snr_db: Vec<f64>,
    /// User-count grid; only read by the user sweep.
    pub users: Vec<usize>,
    pub schemes: Vec<SchemeId>,
    pub n_geometries: usize,
    /// Monte-Carlo samples per subcarrier for the rate upper bound.
    pub n_realizations: usize,
    /// Monte-Carlo samples per subcarrier for the ZF moments.
    pub mc_samples: usize,
    pub master_seed: u64,
    pub upper_bound: bool,
    /// UL SNR of the idealized Table I setting.
    pub snr_ul_db: f64,
    /// Worker threads; `None` uses the default pool, `Some(1)` runs inline.
    pub threads: Option<usize>,
}

fn db_range(lo: i32, hi: i32, step: usize) -> Vec<f64> {
    (lo..=hi).step_by(step).map(f64::from).collect()
}

impl ExperimentSpec {
    pub fn preset(kind: ExperimentKind, preset: Preset) -> Self {
        use ExperimentKind::*;
        let paper = preset == Preset::Paper;
        let snr_db = match kind {
            Qse => vec![30.0, 35.0, 40.0],
            Users | Table1 => vec![10.0],
            Nmse | Rate if paper => db_range(-10, 40, 5),
            Nmse | Rate => db_range(-10, 30, 10),
        };
        let users = if paper {
            (1..=30).collect()
        } else {
            vec![1, 2, 4, 8, 16, 24, 32]
        };
        let schemes = match kind {
            Qse => vec![SchemeId::Tkl],
            Rate => SchemeId::ALL.to_vec(),
            _ => SchemeId::FEEDBACK.to_vec(),
        };
        ExperimentSpec {
            kind,
            system: SystemConfig::default(),
            paths: 6,
            beta_fb: if kind == Qse { vec![3, 10] } else { vec![3] },
            snr_db,
            users,
            schemes,
            n_geometries: if paper { 10 } else { 3 },
            n_realizations: if paper { 1000 } else { 100 },
            mc_samples: if paper { 10_000 } else { 500 },
            master_seed: 1,
            upper_bound: kind == Rate,
            snr_ul_db: 100.0,
            threads: None,
        }
    }

    /// Build from a preset, then a config file. An explicit `preset` wins
    /// over the one named in the file.
    pub fn load(kind: ExperimentKind, preset: Option<Preset>, file: Option<&str>) -> Result<Self> {
        let parsed: SpecFile = match file {
            Some(text) => toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?,
            None => SpecFile::default(),
        };
        let preset = preset.or(parsed.experiment.preset).unwrap_or(Preset::Fast);
        let mut spec = ExperimentSpec::preset(kind, preset);
        parsed.apply(&mut spec)?;
        Ok(spec)
    }

    /// `K` values visited by this experiment.
    pub fn user_grid(&self) -> Vec<usize> {
        if self.kind == ExperimentKind::Users {
            self.users.clone()
        } else {
            vec![self.system.k]
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        self.system.validate()?;
        if self.paths == 0 {
            return fail("paths must be positive".into());
        }
        if self.kind != ExperimentKind::Table1 && self.beta_fb.is_empty() {
            return fail("beta_fb grid is empty".into());
        }
        if self.kind != ExperimentKind::Table1 && self.snr_db.is_empty() {
            return fail("snr_db grid is empty".into());
        }
        if let Some(x) = self.snr_db.iter().find(|x| !x.is_finite()) {
            return fail(format!("snr_db entry {x} is not finite"));
        }
        if !self.snr_ul_db.is_finite() {
            return fail("snr_ul_db is not finite".into());
        }
        if self.kind == ExperimentKind::Users {
            if self.users.is_empty() {
                return fail("users grid is empty".into());
            }
            if let Some(&k) = self.users.iter().find(|&&k| k == 0 || k > self.system.m) {
                return fail(format!("user count {k} is outside 1..={}", self.system.m));
            }
        }
        if self.kind == ExperimentKind::Qse {
            let mut xs = self.snr_db.clone();
            xs.sort_by(f64::total_cmp);
            xs.dedup();
            if xs.len() < 3 {
                return Err(Error::TooFewPoints(xs.len()));
            }
        }
        if self.schemes.is_empty() {
            return fail("scheme list is empty".into());
        }
        for (i, s) in self.schemes.iter().enumerate() {
            if self.schemes[..i].contains(s) {
                return fail(format!("scheme {s} listed twice"));
            }
        }
        if self.kind.nmse_only() && self.schemes.contains(&SchemeId::Perfect) {
            return fail(format!(
                "{} reports NMSE, which the perfect scheme does not have",
                self.kind
            ));
        }
        if self.n_geometries == 0 {
            return fail("geometries must be positive".into());
        }
        if matches!(self.kind, ExperimentKind::Rate | ExperimentKind::Users) {
            if self.mc_samples == 0 {
                return fail("mc_samples must be positive".into());
            }
            if self.upper_bound && self.n_realizations == 0 {
                return fail("realizations must be positive when the upper bound is on".into());
            }
        }
        if self.threads == Some(0) {
            return fail("threads must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    #[serde(default)]
    experiment: ExperimentSection,
    #[serde(default)]
    system: SystemSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ExperimentSection {
    preset: Option<Preset>,
    paths: Option<usize>,
    beta_fb: Option<Vec<usize>>,
    snr_db: Option<Vec<f64>>,
    users: Option<Vec<usize>>,
    schemes: Option<Vec<String>>,
    geometries: Option<usize>,
    realizations: Option<usize>,
    mc_samples: Option<usize>,
    seed: Option<u64>,
    upper_bound: Option<bool>,
    snr_ul_db: Option<f64>,
    threads: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SystemSection {
    m: Option<usize>,
    n: Option<usize>,
    k: Option<usize>,
    delta_f: Option<f64>,
    tau_max: Option<f64>,
    t: Option<usize>,
    t_p: Option<usize>,
    pilot_subcarriers: Option<Vec<usize>>,
    kappa: Option<f64>,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl SpecFile {
    fn apply(self, spec: &mut ExperimentSpec) -> Result<()> {
        let e = self.experiment;
        set(&mut spec.paths, e.paths);
        set(&mut spec.beta_fb, e.beta_fb);
        set(&mut spec.snr_db, e.snr_db);
        set(&mut spec.users, e.users);
        if let Some(list) = e.schemes {
            spec.schemes = list.iter().map(|s| s.parse()).collect::<Result<_>>()?;
        }
        set(&mut spec.n_geometries, e.geometries);
        set(&mut spec.n_realizations, e.realizations);
        set(&mut spec.mc_samples, e.mc_samples);
        set(&mut spec.master_seed, e.seed);
        set(&mut spec.upper_bound, e.upper_bound);
        set(&mut spec.snr_ul_db, e.snr_ul_db);
        if e.threads.is_some() {
            spec.threads = e.threads;
        }

        let s = self.system;
        let sys = &mut spec.system;
        let n_before = sys.n;
        set(&mut sys.m, s.m);
        set(&mut sys.n, s.n);
        set(&mut sys.k, s.k);
        set(&mut sys.delta_f, s.delta_f);
        set(&mut sys.tau_max, s.tau_max);
        set(&mut sys.t, s.t);
        set(&mut sys.t_p, s.t_p);
        match s.pilot_subcarriers {
            Some(p) => sys.pilot_subcarriers = p,
            None if sys.n != n_before => {
                sys.pilot_subcarriers = comb_subcarriers(sys.n, sys.pilot_subcarriers.len())
            }
            None => {}
        }
        sys.kappa = s.kappa.unwrap_or(1.0 - sys.k as f64 / sys.m as f64);
        Ok(())
    }
}
