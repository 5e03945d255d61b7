//! CSV and JSON artifacts.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so every
//! file read back through this module reproduces the written values bit for
//! bit. Lines starting with `#` are comments; the dataset writer uses them to
//! carry its generating parameters as JSON.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::data::{DataMeta, Dataset};
use crate::error::{invalid, Result};
use crate::gp::GpPosterior;
use crate::training::{TraceRecord, TrainTrace};
use crate::width_limit::CorrespondenceReport;

pub const TRACE_HEADER: [&str; 4] = ["iter", "data_loss", "physics_loss", "total_loss"];
pub const SOLUTION_HEADER: [&str; 3] = ["x", "f", "truth"];
pub const CORRESPONDENCE_HEADER: [&str; 5] = ["x", "x_prime", "mc", "kernel", "abs_error"];
pub const POSTERIOR_HEADER: [&str; 3] = ["x", "mean", "std"];
pub const SAMPLE_HEADER: [&str; 2] = ["x", "sample"];
pub const DATASET_HEADER: [&str; 2] = ["x", "y"];

/// A numeric CSV table.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Comment lines without the leading `#`.
    pub comments: Vec<String>,
}

impl Table {
    pub fn new(header: &[&str], rows: Vec<Vec<f64>>) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows, comments: Vec::new() }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    fn expect_header(&self, expected: &[&str]) -> Result<()> {
        if self.header.iter().map(String::as_str).ne(expected.iter().copied()) {
            return Err(invalid(format!("expected columns {:?}, found {:?}", expected, self.header)));
        }
        Ok(())
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        for c in &self.comments {
            writeln!(out, "#{c}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            if row.len() != self.header.len() {
                return Err(invalid(format!("row has {} fields, header has {}", row.len(), self.header.len())));
            }
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(mut input: R) -> Result<Self> {
        let mut text = String::new();
        input.read_to_string(&mut text)?;
        let comments = text.lines().filter_map(|l| l.strip_prefix('#')).map(str::to_string).collect();
        let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
        let header = reader.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record?;
            let row = record
                .iter()
                .map(|field| field.parse::<f64>().map_err(|e| invalid(format!("bad number {field:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Ok(Self { header, rows, comments })
    }

    pub fn write_path(&self, path: &Path) -> Result<()> {
        let file = BufWriter::new(File::create(path)?);
        self.write(file)
    }

    pub fn read_path(path: &Path) -> Result<Self> {
        Self::read(File::open(path)?)
    }
}

pub fn trace_table(trace: &TrainTrace) -> Table {
    let rows = trace
        .records
        .iter()
        .map(|r| vec![r.iteration as f64, r.data_loss, r.physics_loss, r.total_loss])
        .collect();
    Table::new(&TRACE_HEADER, rows)
}

pub fn trace_from_table(table: &Table) -> Result<TrainTrace> {
    table.expect_header(&TRACE_HEADER)?;
    let records = table
        .rows
        .iter()
        .map(|r| TraceRecord { iteration: r[0] as usize, data_loss: r[1], physics_loss: r[2], total_loss: r[3] })
        .collect();
    Ok(TrainTrace { records })
}

pub fn write_trace(path: &Path, trace: &TrainTrace) -> Result<()> {
    trace_table(trace).write_path(path)
}

pub fn read_trace(path: &Path) -> Result<TrainTrace> {
    trace_from_table(&Table::read_path(path)?)
}

pub fn correspondence_table(report: &CorrespondenceReport) -> Table {
    let rows = report
        .grid
        .iter()
        .zip(report.mc_estimate.iter().zip(&report.kernel_value))
        .map(|(&(x, xp), (&mc, &k))| vec![x, xp, mc, k, (mc - k).abs()])
        .collect();
    Table::new(&CORRESPONDENCE_HEADER, rows)
}

pub fn write_correspondence(path: &Path, report: &CorrespondenceReport) -> Result<()> {
    correspondence_table(report).write_path(path)
}

pub fn read_correspondence(path: &Path) -> Result<Table> {
    let t = Table::read_path(path)?;
    t.expect_header(&CORRESPONDENCE_HEADER)?;
    Ok(t)
}

pub fn posterior_table(xs: &[f64], posterior: &GpPosterior) -> Table {
    let rows = xs
        .iter()
        .zip(posterior.mean.iter().zip(posterior.std()))
        .map(|(&x, (&m, s))| vec![x, m, s])
        .collect();
    Table::new(&POSTERIOR_HEADER, rows)
}

pub fn write_posterior(path: &Path, xs: &[f64], posterior: &GpPosterior) -> Result<()> {
    posterior_table(xs, posterior).write_path(path)
}

pub fn read_posterior(path: &Path) -> Result<Table> {
    let t = Table::read_path(path)?;
    t.expect_header(&POSTERIOR_HEADER)?;
    Ok(t)
}

pub fn write_sample(path: &Path, xs: &[f64], sample: &[f64]) -> Result<()> {
    let rows = xs.iter().zip(sample).map(|(&x, &s)| vec![x, s]).collect();
    Table::new(&SAMPLE_HEADER, rows).write_path(path)
}

pub fn dataset_table(data: &Dataset) -> Result<Table> {
    let mut t = Table::new(&DATASET_HEADER, data.iter().map(|(x, y)| vec![x, y]).collect());
    if let Some(meta) = &data.meta {
        t.comments.push(format!(" {}", serde_json::to_string(meta)?));
    }
    Ok(t)
}

pub fn dataset_from_table(table: &Table) -> Result<Dataset> {
    table.expect_header(&DATASET_HEADER)?;
    let mut data = Dataset::new(table.rows.iter().map(|r| r[0]).collect(), table.rows.iter().map(|r| r[1]).collect())?;
    data.meta = table
        .comments
        .iter()
        .find_map(|c| serde_json::from_str::<DataMeta>(c.trim()).ok());
    Ok(data)
}

pub fn write_dataset(path: &Path, data: &Dataset) -> Result<()> {
    dataset_table(data)?.write_path(path)
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    dataset_from_table(&Table::read_path(path)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut file, value)?;
    writeln!(file)?;
    file.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(File::open(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::generate;
    use proptest::prelude::*;

    #[test]
    fn dataset_round_trip_keeps_meta() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        let data = generate(0.51, 0.50001, 11, 0.2, (0.0, 12.0), 3).unwrap();
        write_dataset(&path, &data).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# {"));
        assert!(text.lines().nth(1).unwrap() == "x,y");
        assert_eq!(read_dataset(&path).unwrap(), data);
    }

    #[test]
    fn trace_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let trace = TrainTrace {
            records: vec![
                TraceRecord { iteration: 0, data_loss: 1.0 / 3.0, physics_loss: 0.0, total_loss: 1.0 / 3.0 },
                TraceRecord { iteration: 1, data_loss: 1e-300, physics_loss: 2.5e17, total_loss: 0.1 + 0.2 },
            ],
        };
        write_trace(&path, &trace).unwrap();
        assert!(std::fs::read_to_string(&path).unwrap().starts_with("iter,data_loss,physics_loss,total_loss\n"));
        assert_eq!(read_trace(&path).unwrap(), trace);
    }

    #[test]
    fn wrong_header_is_rejected() {
        let t = Table::new(&["a", "b"], vec![vec![1.0, 2.0]]);
        assert!(trace_from_table(&t).is_err());
        assert!(dataset_from_table(&t).is_err());
    }

    proptest! {
        #[test]
        fn tables_round_trip_bitwise(rows in prop::collection::vec(prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 3), 0..20)) {
            let table = Table::new(&SOLUTION_HEADER, rows);
            let mut buf = Vec::new();
            table.write(&mut buf).unwrap();
            let back = Table::read(buf.as_slice()).unwrap();
            prop_assert_eq!(back.header, table.header);
            for (a, b) in back.rows.iter().flatten().zip(table.rows.iter().flatten()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
