//! Per-iteration learning curves (likelihood and active-topic count).

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    /// Training log-likelihood of the parameters after `iteration` updates.
    pub likelihood: f64,
    pub active_count: usize,
    pub sizes: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
}

impl Trace {
    pub fn likelihoods(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.likelihood).collect()
    }

    pub fn active_counts(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.active_count).collect()
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    /// `|L_t - L_{t-window}| / |L_t|` at the end of the trace.
    pub fn relative_change(&self, window: usize) -> Option<f64> {
        let n = self.rows.len();
        if n <= window {
            return None;
        }
        let now = self.rows[n - 1].likelihood;
        let then = self.rows[n - 1 - window].likelihood;
        Some(((now - then) / now).abs())
    }

    /// Writes `iteration,likelihood,active_count` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "iteration,likelihood,active_count")?;
        for r in &self.rows {
            writeln!(out, "{},{},{}", r.iteration, r.likelihood, r.active_count)?;
        }
        Ok(())
    }

    /// Reads a trace CSV back; sizes are not stored in the CSV.
    pub fn read_csv<R: BufRead>(reader: R, label: impl AsRef<Path>) -> Result<Trace> {
        let label = label.as_ref();
        let mut rows = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(label, e))?;
            let line = line.trim();
            if i == 0 {
                if line != "iteration,likelihood,active_count" {
                    return Err(Error::parse(label, 1, "expected header iteration,likelihood,active_count"));
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            let bad = || Error::parse(label, i + 1, format!("malformed trace row {line:?}"));
            if f.len() != 3 {
                return Err(bad());
            }
            rows.push(TraceRow {
                iteration: f[0].parse().map_err(|_| bad())?,
                likelihood: f[1].parse().map_err(|_| bad())?,
                active_count: f[2].parse().map_err(|_| bad())?,
                sizes: Vec::new(),
            });
        }
        if rows.windows(2).any(|w| w[1].iteration <= w[0].iteration) {
            return Err(Error::parse(label, 0, "iterations are not increasing"));
        }
        Ok(Trace { rows })
    }
}
