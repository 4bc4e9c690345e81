//! `csifb`: run CSI feedback sweeps and write the results as CSV or JSON.
//!
//! Failures print `{"error": {"kind": ..., "message": ...}}` on stderr and
//! exit with status 1 (bad arguments: 2).

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use csifb::bench::{
    emit, run_nmse_sweep, run_qse, run_rate_sweep, run_table1, run_user_sweep, write_records,
    ExperimentKind, ExperimentSpec, Format, Preset, SweepRecord,
};
use csifb::schemes::SchemeId;
use csifb::Result;

#[derive(Parser, Debug)]
#[command(
    name = "csifb",
    version,
    about = "Closed-loop DL CSI feedback sweeps for multicarrier massive MIMO"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// NMSE against DL SNR.
    NmseSweep(Opts),
    /// DL sum rate against DL SNR (and β_fb when several are given).
    RateSweep(Opts),
    /// NMSE and ZF sum rate against the number of users.
    UserSweep(Opts),
    /// High-SNR NMSE slope per scheme.
    Qse(Opts),
    /// NMSE in the idealized direct-CSI setting.
    Table1(Opts),
}

#[derive(Args, Debug, Clone)]
struct Opts {
    /// TOML config with [experiment] and [system] sections.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_preset)]
    preset: Option<Preset>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated: dr, ecsq, ljscc, tkl, perfect.
    #[arg(long, value_delimiter = ',', value_parser = parse_scheme)]
    schemes: Option<Vec<SchemeId>>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv", value_parser = parse_format)]
    format: Format,
    /// ZF moment samples per subcarrier.
    #[arg(long)]
    mc_samples: Option<usize>,
    /// Upper-bound samples per subcarrier.
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    /// Paths per user (L).
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    beta_fb: Option<Vec<usize>>,
    /// Users served (K) outside the user sweep.
    #[arg(long)]
    k: Option<usize>,
    /// K grid of the user sweep.
    #[arg(long, value_delimiter = ',')]
    users: Option<Vec<usize>>,
    /// DL SNR grid in dB.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr_db: Option<Vec<f64>>,
    #[arg(long)]
    geometries: Option<usize>,
    /// Include (true) or drop (false) the ergodic upper bound.
    #[arg(long)]
    upper_bound: Option<bool>,
    /// UL SNR of the idealized setting, in dB.
    #[arg(long, allow_hyphen_values = true)]
    snr_ul_db: Option<f64>,
}

fn parse_preset(s: &str) -> Result<Preset> {
    s.parse()
}

fn parse_scheme(s: &str) -> Result<SchemeId> {
    s.parse()
}

fn parse_format(s: &str) -> Result<Format> {
    s.parse()
}

impl Opts {
    fn spec(&self, kind: ExperimentKind) -> Result<ExperimentSpec> {
        let text = match &self.config {
            Some(p) => Some(std::fs::read_to_string(p)?),
            None => None,
        };
        let mut spec = ExperimentSpec::load(kind, self.preset, text.as_deref())?;
        if let Some(v) = self.seed {
            spec.master_seed = v;
        }
        if let Some(v) = &self.schemes {
            spec.schemes = v.clone();
        }
        if let Some(v) = self.mc_samples {
            spec.mc_samples = v;
        }
        if let Some(v) = self.realizations {
            spec.n_realizations = v;
        }
        if self.threads.is_some() {
            spec.threads = self.threads;
        }
        if let Some(v) = self.paths {
            spec.paths = v;
        }
        if let Some(v) = &self.beta_fb {
            spec.beta_fb = v.clone();
        }
        if let Some(k) = self.k {
            spec.system.k = k;
            spec.system.kappa = 1.0 - k as f64 / spec.system.m as f64;
        }
        if let Some(v) = &self.users {
            spec.users = v.clone();
        }
        if let Some(v) = &self.snr_db {
            spec.snr_db = v.clone();
        }
        if let Some(v) = self.geometries {
            spec.n_geometries = v;
        }
        if let Some(v) = self.upper_bound {
            spec.upper_bound = v;
        }
        if let Some(v) = self.snr_ul_db {
            spec.snr_ul_db = v;
        }
        spec.validate()?;
        Ok(spec)
    }

    fn write(&self, records: &[SweepRecord]) -> Result<()> {
        match &self.out {
            Some(path) => emit(records, path, self.format),
            None => {
                let stdout = std::io::stdout();
                let mut lock = stdout.lock();
                write_records(records, &mut lock, self.format)?;
                lock.flush()?;
                Ok(())
            }
        }
    }
}

fn run(cmd: &Command) -> Result<()> {
    let (opts, kind, runner): (&Opts, _, fn(&ExperimentSpec) -> Result<Vec<SweepRecord>>) =
        match cmd {
            Command::NmseSweep(o) => (o, ExperimentKind::Nmse, run_nmse_sweep),
            Command::RateSweep(o) => (o, ExperimentKind::Rate, run_rate_sweep),
            Command::UserSweep(o) => (o, ExperimentKind::Users, run_user_sweep),
            Command::Qse(o) => (o, ExperimentKind::Qse, run_qse),
            Command::Table1(o) => (o, ExperimentKind::Table1, run_table1),
        };
    let spec = opts.spec(kind)?;
    log::info!(
        "{kind}: {} geometries, seed {}",
        spec.n_geometries,
        spec.master_seed
    );
    let started = std::time::Instant::now();
    let records = runner(&spec)?;
    log::info!("{} rows in {:.1?}", records.len(), started.elapsed());
    opts.write(&records)
}

fn fail(kind: &str, message: String, code: u8) -> ExitCode {
    eprintln!(
        "{}",
        json!({ "error": { "kind": kind, "message": message } })
    );
    ExitCode::from(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            e.exit()
        }
        Err(e) => return fail("usage", e.render().to_string().trim().to_string(), 2),
    };
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), e.to_string(), 1),
    }
}
