//! Experiment harness: specs, seeded sweeps, QSE fits and output files.

mod exec;
mod qse;
mod record;
mod seed;
mod spec;
mod sweep;

pub use exec::map_units;
pub use qse::{estimate_qse_slope, least_squares_slope, qse_fits, run_qse, QseFit};
pub use record::{
    emit, format_float, read_csv, read_json, round_sig9, write_csv, write_json, write_records,
    Format, Metric, SweepRecord, COLUMNS,
};
pub use seed::{mix, Purpose, StreamKey};
pub use spec::{ExperimentKind, ExperimentSpec, Preset, TABLE1_SETTINGS};
pub use sweep::{
    evaluate, grid, metrics, point_config, run_nmse_sweep, run_rate_sweep, run_table1,
    run_user_sweep, scheme_outputs, Cell, Estimate, GridPoint, Sample, SweepResult,
    TABLE1_PILOT_SNR_DB,
};
