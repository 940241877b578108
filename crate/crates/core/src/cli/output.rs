//! Artifact writers and readers. Every file is written to a temporary sibling and renamed.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::diagnostics::energy_residual;
use crate::error::{Error, Result};
use crate::integrate::RunTrace;
use crate::model::{c0_from_state, Grid, Params, State};

pub const TRACE_HEADER: &str =
    "t,fluid_mass,surfactant_mass,energy,diss_1,diss_2,diss_3,diss_4,diss_5,residual,l2_h,l2_m,l2_gamma";
pub const SNAPSHOT_HEADER: &str = "x,h,m,gamma,c0";

/// 17 significant digits, so values survive a text round trip exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp-{}", std::process::id()));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn trace_csv(trace: &RunTrace) -> String {
    let residual = energy_residual(trace).ok();
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for k in 0..trace.len() {
        let d = trace.dissipation[k].as_array();
        let nrm = &trace.norms[k];
        let r = residual.as_ref().map_or(f64::NAN, |r| r[k]);
        let row = [trace.times[k], trace.fluid_mass[k], trace.surfactant_mass[k], trace.energy[k]]
            .into_iter()
            .chain(d)
            .chain([r, nrm.l2_h, nrm.l2_m, nrm.l2_gamma])
            .map(fmt_f64)
            .collect::<Vec<_>>()
            .join(",");
        out.push_str(&row);
        out.push('\n');
    }
    out
}

pub fn snapshot_csv(state: &State, params: &Params) -> Result<String> {
    let grid = Grid::new(state.n_cells(), params.length)?;
    let c0 = c0_from_state(state, params)?;
    let mut out = String::from(SNAPSHOT_HEADER);
    out.push('\n');
    for i in 0..state.n_cells() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(grid.center(i)),
            fmt_f64(state.h[i]),
            fmt_f64(state.m[i]),
            fmt_f64(state.gamma[i]),
            fmt_f64(c0[i])
        );
    }
    Ok(out)
}

/// Parsed numeric CSV: header names and rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::Config("empty CSV".into()))?
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for (k, line) in lines.enumerate() {
            let row = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::Config(format!("CSV row {}: {e}", k + 1)))?;
            if row.len() != header.len() {
                return Err(Error::Shape { what: "CSV row", got: row.len(), expected: header.len() });
            }
            rows.push(row);
        }
        Ok(Table { header, rows })
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("CSV lacks column {name:?}")))?;
        Ok(self.rows.iter().map(|r| r[i]).collect())
    }
}
