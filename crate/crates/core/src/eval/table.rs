use std::fmt::Write as _;
use std::str::FromStr;

use serde::Deserialize;

use super::experiment::Method;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "method,n_r,mean_mse,std_mse,repeats";
const FAILURE_PREFIX: &str = "# failure: ";

/// Aggregate over the successful repeats of one (method, `n_R`) cell.
///
/// `std_mse` is the sample standard deviation (divisor `repeats − 1`), and 0
/// when only one repeat succeeded. `repeats == 0` means every repeat failed
/// and both statistics are NaN.
#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
pub struct ResultRow {
    pub method: Method,
    pub n_r: usize,
    pub mean_mse: f64,
    pub std_mse: f64,
    pub repeats: usize,
}

impl ResultRow {
    pub(crate) fn from_samples(method: Method, n_r: usize, mses: &[f64]) -> Self {
        let n = mses.len();
        let (mean_mse, std_mse) = match n {
            0 => (f64::NAN, f64::NAN),
            1 => (mses[0], 0.0),
            _ => {
                let mean = mses.iter().sum::<f64>() / n as f64;
                let var = mses.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                (mean, var.sqrt())
            }
        };
        ResultRow {
            method,
            n_r,
            mean_mse,
            std_mse,
            repeats: n,
        }
    }
}

/// A fit or prediction that failed in one repeat.
#[derive(Clone, Debug, PartialEq)]
pub struct CellFailure {
    pub method: Method,
    pub n_r: usize,
    pub repeat: usize,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
    pub failures: Vec<CellFailure>,
}

impl ResultTable {
    pub fn row(&self, method: Method, n_r: usize) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.method == method && r.n_r == n_r)
    }

    /// CSV with `comments` as leading `#` lines and one `# failure:` line per
    /// failed cell. Floats use the shortest representation that parses back
    /// to the same value.
    pub fn to_csv(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            for line in c.lines() {
                writeln!(out, "# {line}").unwrap();
            }
        }
        for f in &self.failures {
            writeln!(
                out,
                "{FAILURE_PREFIX}{} {} {} {}",
                f.method,
                f.n_r,
                f.repeat,
                f.message.replace(['\n', '\r'], " ")
            )
            .unwrap();
        }
        writeln!(out, "{CSV_HEADER}").unwrap();
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.method, r.n_r, r.mean_mse, r.std_mse, r.repeats
            )
            .unwrap();
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut failures = Vec::new();
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix(FAILURE_PREFIX) {
                let mut parts = rest.splitn(4, ' ');
                let mut next = || parts.next().ok_or_else(|| Error::Schema(format!("bad failure line: {line}")));
                let method = Method::from_str(next()?)?;
                let n_r = next()?.parse().map_err(|_| Error::Schema(format!("bad n_r in: {line}")))?;
                let repeat = next()?.parse().map_err(|_| Error::Schema(format!("bad repeat in: {line}")))?;
                let message = parts.next().unwrap_or("").to_string();
                failures.push(CellFailure {
                    method,
                    n_r,
                    repeat,
                    message,
                });
            }
        }
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let header = reader
            .headers()
            .map_err(|e| Error::Schema(e.to_string()))?
            .iter()
            .collect::<Vec<_>>()
            .join(",");
        if header != CSV_HEADER {
            return Err(Error::Schema(format!("unexpected header {header:?}")));
        }
        let rows = reader
            .deserialize()
            .collect::<std::result::Result<Vec<ResultRow>, _>>()
            .map_err(|e| Error::Schema(e.to_string()))?;
        Ok(ResultTable { rows, failures })
    }

    /// Whitespace-separated columns, one block per method separated by blank
    /// lines (gnuplot `index` blocks).
    pub fn to_plot_data(&self) -> String {
        let mut out = String::from("# n_r mean_mse std_mse\n");
        let mut methods: Vec<Method> = Vec::new();
        for r in &self.rows {
            if !methods.contains(&r.method) {
                methods.push(r.method);
            }
        }
        for (i, m) in methods.iter().enumerate() {
            if i > 0 {
                out.push_str("\n\n");
            }
            writeln!(out, "# {m}").unwrap();
            for r in self.rows.iter().filter(|r| r.method == *m) {
                writeln!(out, "{} {} {}", r.n_r, r.mean_mse, r.std_mse).unwrap();
            }
        }
        out
    }

    /// Aligned table for terminals.
    pub fn render(&self) -> String {
        let mut out = format!("{:<6} {:>8} {:>14} {:>14} {:>8}\n", "method", "n_r", "mean_mse", "std_mse", "repeats");
        for r in &self.rows {
            writeln!(
                out,
                "{:<6} {:>8} {:>14.6} {:>14.6} {:>8}",
                r.method.to_string(),
                r.n_r,
                r.mean_mse,
                r.std_mse,
                r.repeats
            )
            .unwrap();
        }
        for f in &self.failures {
            writeln!(out, "failed: {} n_r={} repeat={}: {}", f.method, f.n_r, f.repeat, f.message).unwrap();
        }
        out
    }
}
