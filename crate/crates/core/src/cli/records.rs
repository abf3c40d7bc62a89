//! Trajectory rows and their CSV form.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "trajectory_id,kind,k,t_seconds,x_m,vx_mps,y_m,vy_mps";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub trajectory_id: u64,
    pub kind: String,
    pub k: usize,
    pub t_seconds: f64,
    pub x_m: f64,
    pub vx_mps: f64,
    pub y_m: f64,
    pub vy_mps: f64,
}

pub fn write_csv<W: Write>(out: W, rows: &[TrajectoryRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER.split(','))
        .map_err(|e| Error::Csv { line: 1, message: e.to_string() })?;
    for (i, row) in rows.iter().enumerate() {
        w.serialize(row).map_err(|e| Error::Csv {
            line: i + 2,
            message: e.to_string(),
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<TrajectoryRow>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = r
        .headers()
        .map_err(|e| Error::Csv { line: 1, message: e.to_string() })?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header.is_empty() {
        return Ok(Vec::new());
    }
    if header != CSV_HEADER {
        return Err(Error::Csv {
            line: 1,
            message: format!("expected header `{CSV_HEADER}`, found `{header}`"),
        });
    }
    r.deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| Error::Csv { line: i + 2, message: e.to_string() }))
        .collect()
}
