//! Plain-text report tables and count-record CSV files. All output is
//! byte-stable: fixed float precision, no timestamps, insertion-ordered rows.

use std::fmt::Write as _;
use std::path::Path;

use crate::entanglement::CountRecord;
use crate::error::{Error, Result};

pub const COUNT_CSV_HEADER: &str =
    "theta_s_deg,theta_i_deg,duration_s,Ns_hz,Ni_hz,N_hz,bg_subtracted,seed";

/// Three-column quantity/value/unit table; rows render aligned.
#[derive(Debug, Default)]
pub struct Table {
    rows: Vec<(String, String, String)>,
}

impl Table {
    pub fn new() -> Self {
        Table::default()
    }

    pub fn row(&mut self, name: &str, value: impl Into<String>, unit: &str) {
        self.rows
            .push((name.to_string(), value.into(), unit.to_string()));
    }

    pub fn blank(&mut self) {
        self.rows
            .push((String::new(), String::new(), String::new()));
    }

    pub fn section(&mut self, title: &str) {
        if !self.rows.is_empty() {
            self.blank();
        }
        self.rows
            .push((format!("[{title}]"), String::new(), String::new()));
    }

    /// Free-form line (diagnostics, notes) that takes no part in column
    /// alignment.
    pub fn note(&mut self, text: &str) {
        self.rows
            .push((text.to_string(), String::new(), String::new()));
    }

    pub fn render(&self) -> String {
        // Only three-field rows participate in alignment; notes and section
        // headers render verbatim.
        let aligned = self.rows.iter().filter(|r| !r.1.is_empty());
        let name_w = aligned.clone().map(|r| r.0.len()).max().unwrap_or(0);
        let value_w = aligned.map(|r| r.1.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (name, value, unit) in &self.rows {
            if name.is_empty() && value.is_empty() {
                out.push('\n');
            } else if value.is_empty() {
                let _ = writeln!(out, "{name}");
            } else {
                let _ = writeln!(out, "{name:<name_w$}  {value:>value_w$}  {unit}");
            }
        }
        out
    }
}

/// Fixed-precision float for reports and CSVs.
pub fn fmt_f(value: f64, decimals: usize) -> String {
    format!("{value:.decimals$}")
}

pub fn write_text(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent.display().to_string(), e))?;
    }
    std::fs::write(path, content).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn write_count_records_csv(path: &Path, records: &[CountRecord]) -> Result<()> {
    let mut out = String::from(COUNT_CSV_HEADER);
    out.push('\n');
    for r in records {
        let seed = r.seed.map(|s| s.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt_f(r.theta_s_deg, 3),
            fmt_f(r.theta_i_deg, 3),
            fmt_f(r.duration_s, 6),
            fmt_f(r.ns_hz, 6),
            fmt_f(r.ni_hz, 6),
            fmt_f(r.n_hz, 6),
            r.bg_subtracted,
            seed
        );
    }
    write_text(path, &out)
}

pub fn read_count_records_csv(path: &Path) -> Result<Vec<CountRecord>> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let Some(header) = lines.next() else {
        return Err(Error::NoRecords);
    };
    if header.trim() != COUNT_CSV_HEADER {
        return Err(Error::InvalidRecords {
            message: format!(
                "unexpected CSV header '{}', want '{}'",
                header.trim(),
                COUNT_CSV_HEADER
            ),
        });
    }
    let mut records = Vec::new();
    for (idx, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(Error::InvalidRecords {
                message: format!("row {} has {} fields, want 8", idx + 2, fields.len()),
            });
        }
        let num = |k: usize, label: &str| -> Result<f64> {
            fields[k]
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidRecords {
                    message: format!("row {}: {label} '{}' is not a number", idx + 2, fields[k]),
                })
        };
        let bg = match fields[6].trim() {
            "true" => true,
            "false" => false,
            other => {
                return Err(Error::InvalidRecords {
                    message: format!("row {}: bg_subtracted '{other}' is not true/false", idx + 2),
                })
            }
        };
        let seed = {
            let raw = fields[7].trim();
            if raw.is_empty() {
                None
            } else {
                Some(raw.parse::<u64>().map_err(|_| Error::InvalidRecords {
                    message: format!("row {}: seed '{raw}' is not an integer", idx + 2),
                })?)
            }
        };
        records.push(CountRecord {
            theta_s_deg: num(0, "theta_s_deg")?,
            theta_i_deg: num(1, "theta_i_deg")?,
            duration_s: num(2, "duration_s")?,
            ns_hz: num(3, "Ns_hz")?,
            ni_hz: num(4, "Ni_hz")?,
            n_hz: num(5, "N_hz")?,
            bg_subtracted: bg,
            seed,
        });
    }
    if records.is_empty() {
        return Err(Error::NoRecords);
    }
    Ok(records)
}
