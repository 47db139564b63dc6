//! Report records and their CSV/JSON encodings.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

/// Column order of every frontier file.
pub const FRONTIER_HEADER: [&str; 11] = [
    "lambda",
    "problem",
    "strategy",
    "leakage_bits",
    "utility_bits",
    "leakage_norm",
    "utility_loss_norm",
    "alphabet_size",
    "iterations",
    "seed",
    "wall_time_ms",
];

pub const SIGNIFICANT_DIGITS: usize = 12;

/// `%.12g`: 12 significant digits, trailing zeros dropped, exponent form
/// outside `[1e-5, 1e12)`.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= SIGNIFICANT_DIGITS as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { "-" } else { "+" };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}"))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// The value as printed, read back; JSON carries these so both encodings
/// agree digit for digit.
pub fn round_sig(v: f64) -> f64 {
    if !v.is_finite() {
        return v;
    }
    fmt_num(v).parse().expect("formatted number parses")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    /// From the output extension, JSON otherwise.
    pub fn infer(path: Option<&Path>) -> Format {
        match path.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Json,
        }
    }
}

/// One run in a frontier file. For pairwise baselines `lambda` holds the
/// threshold in bits and `strategy` is `pairwise`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub lambda: f64,
    pub problem: String,
    pub strategy: String,
    pub leakage_bits: f64,
    pub utility_bits: f64,
    pub leakage_norm: f64,
    pub utility_loss_norm: f64,
    pub alphabet_size: usize,
    pub iterations: usize,
    pub seed: u64,
    pub wall_time_ms: u64,
}

impl ReportRecord {
    pub fn rounded(mut self) -> Self {
        self.lambda = round_sig(self.lambda);
        self.leakage_bits = round_sig(self.leakage_bits);
        self.utility_bits = round_sig(self.utility_bits);
        self.leakage_norm = round_sig(self.leakage_norm);
        self.utility_loss_norm = round_sig(self.utility_loss_norm);
        self
    }

    fn csv_fields(&self) -> [String; 11] {
        [
            fmt_num(self.lambda),
            self.problem.clone(),
            self.strategy.clone(),
            fmt_num(self.leakage_bits),
            fmt_num(self.utility_bits),
            fmt_num(self.leakage_norm),
            fmt_num(self.utility_loss_norm),
            self.alphabet_size.to_string(),
            self.iterations.to_string(),
            self.seed.to_string(),
            self.wall_time_ms.to_string(),
        ]
    }
}

/// Single-run report: the record, where the data came from, and the path of
/// every tracked quantity per merge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    #[serde(flatten)]
    pub record: ReportRecord,
    pub dataset_id: String,
    pub trajectory: Vec<f64>,
    pub leakage_path: Vec<f64>,
    pub utility_path: Vec<f64>,
    pub merges: Vec<Vec<String>>,
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn rounded(mut self) -> Self {
        self.record = self.record.rounded();
        for path in [&mut self.trajectory, &mut self.leakage_path, &mut self.utility_path] {
            for v in path.iter_mut() {
                *v = round_sig(*v);
            }
        }
        self
    }
}

pub fn frontier_csv(records: &[ReportRecord]) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(FRONTIER_HEADER)?;
    for r in records {
        w.write_record(r.csv_fields())?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

pub fn frontier_json(records: &[ReportRecord]) -> serde_json::Result<Vec<u8>> {
    let rounded: Vec<ReportRecord> = records.iter().cloned().map(ReportRecord::rounded).collect();
    let mut out = serde_json::to_vec_pretty(&rounded)?;
    out.push(b'\n');
    Ok(out)
}

/// CSV form of a run: the record under the frontier header, a blank line,
/// then one row per merge count `k`.
pub fn run_csv(report: &RunReport) -> Result<Vec<u8>, csv::Error> {
    let mut out = frontier_csv(std::slice::from_ref(&report.record))?;
    out.push(b'\n');
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    w.write_record(["k", "trajectory", "leakage_bits", "utility_bits", "merged"])?;
    for k in 0..report.trajectory.len() {
        let merged = if k == 0 { String::new() } else { report.merges[k - 1].join(" ") };
        w.write_record([
            k.to_string(),
            fmt_num(report.trajectory[k]),
            fmt_num(report.leakage_path[k]),
            fmt_num(report.utility_path[k]),
            merged,
        ])?;
    }
    out.extend(w.into_inner().map_err(|e| e.into_error())?);
    Ok(out)
}

pub fn run_json(report: &RunReport) -> serde_json::Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(&report.clone().rounded())?;
    out.push(b'\n');
    Ok(out)
}

/// Writes to `path`, or to standard output when `None`.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReadError {
    #[error("cannot read {0}: {1}")]
    Io(String, std::io::Error),
    #[error("malformed frontier json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed frontier csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Reads a frontier file in either encoding (CSV when it starts with the
/// header).
pub fn read_frontier(path: &Path) -> Result<Vec<ReportRecord>, ReadError> {
    let text = std::fs::read_to_string(path).map_err(|e| ReadError::Io(path.display().to_string(), e))?;
    if text.trim_start().starts_with('[') {
        return Ok(serde_json::from_str(&text)?);
    }
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize().collect::<Result<Vec<_>, _>>().map_err(Into::into)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(0.5), "0.5");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_num(-2.0 / 3.0), "-0.666666666667");
        assert_eq!(fmt_num(123456.789), "123456.789");
        assert_eq!(fmt_num(1.5e-7), "1.5e-07");
        assert_eq!(fmt_num(2.5e13), "2.5e+13");
        assert_eq!(fmt_num(0.00012345678901234), "0.000123456789012");
        assert_eq!(fmt_num(999999999999.9), "1e+12");
    }

    #[test]
    fn rounding_matches_printing() {
        for v in [0.1 + 0.2, 1.0 / 7.0, -1.675488750216, 3.0e-9] {
            assert_eq!(fmt_num(round_sig(v)), fmt_num(v));
            assert_eq!(round_sig(round_sig(v)), round_sig(v));
        }
    }

    fn sample() -> ReportRecord {
        ReportRecord {
            lambda: 0.25,
            problem: "pf".into(),
            strategy: "supsub".into(),
            leakage_bits: 1.0 / 3.0,
            utility_bits: 1.2,
            leakage_norm: 0.123456789012345,
            utility_loss_norm: -0.75,
            alphabet_size: 3,
            iterations: 1,
            seed: 7,
            wall_time_ms: 0,
        }
    }

    #[test]
    fn encodings_agree() {
        let recs = vec![sample()];
        let csv_bytes = frontier_csv(&recs).unwrap();
        let header = String::from_utf8(csv_bytes.clone()).unwrap();
        assert!(header.starts_with(
            "lambda,problem,strategy,leakage_bits,utility_bits,leakage_norm,utility_loss_norm,alphabet_size,iterations,seed,wall_time_ms\n"
        ));
        let json_bytes = frontier_json(&recs).unwrap();
        let from_csv: Vec<ReportRecord> =
            csv::Reader::from_reader(csv_bytes.as_slice()).deserialize().collect::<Result<_, _>>().unwrap();
        let from_json: Vec<ReportRecord> = serde_json::from_slice(&json_bytes).unwrap();
        assert_eq!(from_csv, from_json);
        assert_eq!(from_json[0].leakage_bits, 0.333333333333);
    }
}
