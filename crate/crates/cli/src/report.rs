use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use orthomin_core::diagnostics::{BoundReport, RateEstimate};
use orthomin_core::{ConvergenceTrace, SolveStatus};
use serde::{Deserialize, Serialize};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DEFAULT_DIGITS: usize = 10;

/// Shortest of fixed or scientific notation with `digits` significant
/// digits, trailing zeros removed (C's `%g`).
pub fn format_sig(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        format!("{}e{exp}", trim_zeros(mantissa))
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, v)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_body<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "{}", self.header.join(","))?;
        for row in &self.rows {
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Body preceded by a `#` line carrying the version and a timestamp.
    pub fn write_with_header<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "{}", timestamp_line())?;
        self.write_body(out)
    }

    pub fn save(&self, path: &Path) -> io::Result<()> {
        let mut buf = Vec::new();
        self.write_with_header(&mut buf)?;
        fs::write(path, buf)
    }
}

pub fn timestamp_line() -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("# orthomin-lab {VERSION} generated_unix={secs}")
}

/// Per-`k` outcome of one solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KResult {
    pub k: usize,
    pub status: SolveStatus,
    pub iterations: usize,
    pub final_residual: f64,
    pub max_q: Option<f64>,
    pub residual_norms: Vec<f64>,
    pub q: Vec<f64>,
}

impl KResult {
    pub fn from_trace(trace: &ConvergenceTrace, status: SolveStatus) -> Self {
        let q = trace.q_values();
        Self {
            k: trace.k,
            status,
            iterations: trace.len().saturating_sub(1),
            final_residual: trace.last_residual_norm(),
            max_q: q.iter().copied().reduce(f64::max),
            residual_norms: trace.residual_norms(),
            q,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: serde_json::Value,
    pub results: Vec<KResult>,
    pub bounds: Option<BoundReport>,
    /// Keyed by `k`.
    pub rates: BTreeMap<String, RateEstimate>,
    pub version: String,
    pub wall_time_s: f64,
}

impl RunReport {
    /// One row per `(k, n)`.
    pub fn tidy_csv(&self, digits: usize) -> CsvTable {
        let mut table = CsvTable::new(["k", "n", "residual_norm", "q"]);
        for res in &self.results {
            for (n, norm) in res.residual_norms.iter().enumerate() {
                let q = res.q.get(n).map(|v| format_sig(*v, digits)).unwrap_or_default();
                table.push(vec![
                    res.k.to_string(),
                    n.to_string(),
                    format_sig(*norm, digits),
                    q,
                ]);
            }
        }
        table
    }

    pub fn save_json(&self, path: &Path) -> io::Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        fs::write(path, text + "\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(format_sig(0.0, 10), "0");
        assert_eq!(format_sig(3.605551275463989, 10), "3.605551275");
        assert_eq!(format_sig(0.8, 10), "0.8");
        assert_eq!(format_sig(-0.000123456789012, 4), "-0.0001235");
        assert_eq!(format_sig(1.5e-9, 10), "1.5e-9");
        assert_eq!(format_sig(123456789012.0, 10), "1.23456789e11");
        assert_eq!(format_sig(42.0, 10), "42");
        assert_eq!(format_sig(0.6247, 2), "0.62");
        assert_eq!(format_sig(f64::NAN, 10), "NaN");
    }

    #[test]
    fn csv_body_and_header() {
        let mut t = CsvTable::new(["a", "b"]);
        t.push(vec!["1".into(), "2".into()]);
        let mut body = Vec::new();
        t.write_body(&mut body).unwrap();
        assert_eq!(String::from_utf8(body).unwrap(), "a,b\n1,2\n");
        let mut full = Vec::new();
        t.write_with_header(&mut full).unwrap();
        let text = String::from_utf8(full).unwrap();
        assert!(text.starts_with("# orthomin-lab "));
        assert!(text.ends_with("a,b\n1,2\n"));
    }
}
