//! CSV serialization of traces: fixed column set, fixed 6-decimal
//! formatting, `\n` line endings. The format quantum is 5e-7, so a
//! parse-back reproduces every value to better than that.

use crate::error::{Error, Result};
use crate::simloop::SimTrace;
use std::fmt::Write as _;

pub const CSV_HEADER: &str = "t,setpoint,pv,pv_clean,u,disturbance";

/// Renders a trace as CSV text: header plus one row per sample, each
/// value with 6 decimal places. Ends with a newline, no blank line.
pub fn emit_csv(trace: &SimTrace) -> String {
    let mut out = String::with_capacity(64 * (trace.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for k in 0..trace.len() {
        writeln!(
            out,
            "{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            trace.t[k], trace.setpoint[k], trace.pv[k], trace.pv_clean[k], trace.u[k], trace.disturbance[k]
        )
        .unwrap();
    }
    out
}

/// Parses CSV text produced by [`emit_csv`] back into rows of
/// (t, setpoint, pv, pv_clean, u, disturbance).
pub fn parse_csv(text: &str) -> Result<Vec<[f64; 6]>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => {
            return Err(Error::Argument(format!("expected CSV header `{CSV_HEADER}`, got {other:?}")));
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::Argument(format!("row {}: expected 6 fields, got {}", idx + 1, fields.len())));
        }
        let mut row = [0.0; 6];
        for (slot, field) in row.iter_mut().zip(&fields) {
            *slot = field
                .parse()
                .map_err(|_| Error::Argument(format!("row {}: `{field}` is not a number", idx + 1)))?;
        }
        rows.push(row);
    }
    Ok(rows)
}
