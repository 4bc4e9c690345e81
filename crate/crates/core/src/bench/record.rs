//! Sweep output rows and their CSV/JSON forms.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Number, Value};

use crate::schemes::SchemeId;
use crate::{Error, Result};

/// Column names, in file order.
pub const COLUMNS: [&str; 11] = [
    "scheme",
    "L",
    "beta_fb",
    "K",
    "snr_dl_dB",
    "metric",
    "value",
    "std_error",
    "n_geometries",
    "seed",
    "note",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "nmse_dB")]
    NmseDb,
    #[serde(rename = "uatf_mrt")]
    UatfMrt,
    #[serde(rename = "uatf_zf")]
    UatfZf,
    #[serde(rename = "rate_ub_mrt")]
    RateUbMrt,
    #[serde(rename = "rate_ub_zf")]
    RateUbZf,
    /// Fitted high-SNR decay exponent of the NMSE.
    #[serde(rename = "qse_slope")]
    QseSlope,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::NmseDb,
        Metric::UatfMrt,
        Metric::UatfZf,
        Metric::RateUbMrt,
        Metric::RateUbZf,
        Metric::QseSlope,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::NmseDb => "nmse_dB",
            Metric::UatfMrt => "uatf_mrt",
            Metric::UatfZf => "uatf_zf",
            Metric::RateUbMrt => "rate_ub_mrt",
            Metric::RateUbZf => "rate_ub_zf",
            Metric::QseSlope => "qse_slope",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown metric '{s}'")))
    }
}

/// One (grid point, scheme, metric) result.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub scheme: SchemeId,
    pub l: usize,
    pub beta_fb: usize,
    pub k: usize,
    pub snr_dl_db: f64,
    pub metric: Metric,
    /// NaN when every geometry was skipped.
    pub value: f64,
    pub std_error: f64,
    /// Geometries that contributed to `value`.
    pub n_geometries: usize,
    pub seed: u64,
    /// Empty, or `reason[:detail]` tags for skipped geometries.
    pub note: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::Parse(format!(
                "unknown format '{s}' (expected csv or json)"
            ))),
        }
    }
}

/// Round to 9 significant digits.
pub fn round_sig9(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().unwrap_or(x)
}

/// Shortest text that reparses to `round_sig9(x)`; plain decimal for
/// moderate magnitudes, exponent form otherwise.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r = round_sig9(x);
    if r == 0.0 || (1e-4..1e9).contains(&r.abs()) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

pub fn write_csv<W: Write>(records: &[SweepRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.scheme.as_str().to_string(),
            r.l.to_string(),
            r.beta_fb.to_string(),
            r.k.to_string(),
            format_float(r.snr_dl_db),
            r.metric.as_str().to_string(),
            format_float(r.value),
            format_float(r.std_error),
            r.n_geometries.to_string(),
            r.seed.to_string(),
            r.note.clone(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn json_float(x: f64) -> Value {
    Number::from_f64(round_sig9(x))
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

fn to_json(r: &SweepRecord) -> Value {
    let mut m = Map::new();
    m.insert("scheme".into(), r.scheme.as_str().into());
    m.insert("L".into(), r.l.into());
    m.insert("beta_fb".into(), r.beta_fb.into());
    m.insert("K".into(), r.k.into());
    m.insert("snr_dl_dB".into(), json_float(r.snr_dl_db));
    m.insert("metric".into(), r.metric.as_str().into());
    m.insert("value".into(), json_float(r.value));
    m.insert("std_error".into(), json_float(r.std_error));
    m.insert("n_geometries".into(), r.n_geometries.into());
    m.insert("seed".into(), r.seed.into());
    m.insert("note".into(), r.note.clone().into());
    Value::Object(m)
}

/// JSON array of row objects; non-finite floats become `null`.
pub fn write_json<W: Write>(records: &[SweepRecord], mut out: W) -> Result<()> {
    let rows: Vec<Value> = records.iter().map(to_json).collect();
    serde_json::to_writer_pretty(&mut out, &rows).map_err(|e| Error::Io(e.into()))?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn write_records<W: Write>(records: &[SweepRecord], out: W, format: Format) -> Result<()> {
    match format {
        Format::Csv => write_csv(records, out),
        Format::Json => write_json(records, out),
    }
}

/// Write `records` to `path`.
pub fn emit(records: &[SweepRecord], path: &Path, format: Format) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut buf = std::io::BufWriter::new(file);
    write_records(records, &mut buf, format)?;
    buf.flush()?;
    Ok(())
}

fn parse_field<T: FromStr>(s: &str, col: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Parse(format!("bad {col} value '{s}'")))
}

fn parse_float(s: &str, col: &str) -> Result<f64> {
    match s {
        "NaN" | "nan" => Ok(f64::NAN),
        _ => parse_field(s, col),
    }
}

/// Read a CSV written by [`write_csv`]; the header must match [`COLUMNS`].
pub fn read_csv<R: Read>(input: R) -> Result<Vec<SweepRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().ne(COLUMNS.iter().copied()) {
        return Err(Error::Parse(format!(
            "unexpected header: {}",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(csv_err)?;
        let f = |i: usize| row.get(i).unwrap_or("");
        out.push(SweepRecord {
            scheme: f(0).parse()?,
            l: parse_field(f(1), COLUMNS[1])?,
            beta_fb: parse_field(f(2), COLUMNS[2])?,
            k: parse_field(f(3), COLUMNS[3])?,
            snr_dl_db: parse_float(f(4), COLUMNS[4])?,
            metric: f(5).parse()?,
            value: parse_float(f(6), COLUMNS[6])?,
            std_error: parse_float(f(7), COLUMNS[7])?,
            n_geometries: parse_field(f(8), COLUMNS[8])?,
            seed: parse_field(f(9), COLUMNS[9])?,
            note: f(10).to_string(),
        });
    }
    Ok(out)
}

/// Read JSON written by [`write_json`]; `null` floats come back as NaN.
pub fn read_json<R: Read>(input: R) -> Result<Vec<SweepRecord>> {
    let rows: Vec<Map<String, Value>> =
        serde_json::from_reader(input).map_err(|e| Error::Parse(e.to_string()))?;
    let get = |m: &Map<String, Value>, k: &str| {
        m.get(k)
            .cloned()
            .ok_or_else(|| Error::Parse(format!("missing {k}")))
    };
    let uint = |v: Value, k: &str| v.as_u64().ok_or_else(|| Error::Parse(format!("bad {k}")));
    let float = |v: Value, k: &str| match v {
        Value::Null => Ok(f64::NAN),
        v => v.as_f64().ok_or_else(|| Error::Parse(format!("bad {k}"))),
    };
    let text = |v: Value, k: &str| {
        v.as_str()
            .map(str::to_string)
            .ok_or_else(|| Error::Parse(format!("bad {k}")))
    };
    rows.iter()
        .map(|m| {
            Ok(SweepRecord {
                scheme: text(get(m, "scheme")?, "scheme")?.parse()?,
                l: uint(get(m, "L")?, "L")? as usize,
                beta_fb: uint(get(m, "beta_fb")?, "beta_fb")? as usize,
                k: uint(get(m, "K")?, "K")? as usize,
                snr_dl_db: float(get(m, "snr_dl_dB")?, "snr_dl_dB")?,
                metric: text(get(m, "metric")?, "metric")?.parse()?,
                value: float(get(m, "value")?, "value")?,
                std_error: float(get(m, "std_error")?, "std_error")?,
                n_geometries: uint(get(m, "n_geometries")?, "n_geometries")? as usize,
                seed: uint(get(m, "seed")?, "seed")?,
                note: text(get(m, "note")?, "note")?,
            })
        })
        .collect()
}
