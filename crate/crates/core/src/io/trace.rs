use std::io::{Read, Write};
use std::path::Path;

use crate::engine::StepRecord;
use crate::error::{Error, Result};

/// Scalar columns; CTM traces append `rho_1..rho_n`.
pub const TRACE_COLUMNS: [&str; 8] = ["t", "k_obs", "u", "f", "g", "lambda", "d_minus", "r"];

/// Writes records as CSV. Floats use the shortest representation that
/// parses back to the same value.
pub fn write_trace_to<W: Write>(out: W, records: &[StepRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let n = records.first().map_or(0, |r| r.field.len());
    let mut header: Vec<String> = TRACE_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend((1..=n).map(|i| format!("rho_{i}")));
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(header.len());
    for rec in records {
        row.clear();
        row.extend(
            [
                rec.t,
                rec.k_obs,
                rec.u,
                rec.f,
                rec.g,
                rec.lambda,
                rec.d_minus,
                rec.r,
            ]
            .iter()
            .map(|v| v.to_string()),
        );
        row.extend(rec.field.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<trace>", e))?;
    Ok(())
}

pub fn write_trace(path: &Path, records: &[StepRecord]) -> Result<()> {
    let mut buf = Vec::new();
    write_trace_to(&mut buf, records)?;
    super::write_atomic(path, &buf)
}

pub fn read_trace<R: Read>(input: R) -> Result<Vec<StepRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    if header.len() < TRACE_COLUMNS.len() || header.iter().zip(TRACE_COLUMNS).any(|(a, b)| a != b) {
        return Err(Error::config("trace", "unexpected CSV header"));
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let vals = row
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| Error::config("trace", format!("bad number {s:?}: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        out.push(StepRecord {
            t: vals[0],
            k_obs: vals[1],
            u: vals[2],
            f: vals[3],
            g: vals[4],
            lambda: vals[5],
            d_minus: vals[6],
            r: vals[7],
            field: vals[8..].to_vec(),
        });
    }
    Ok(out)
}
