//! CSV emission, the dataset file format, and the run manifest.
//!
//! CSV convention: comma separator, one header row, '.' decimal point,
//! floats at 17 significant digits so files are reproducible byte-for-byte
//! and round-trip exactly.

use crate::error::{Error, Result};
use crate::linalg::LocationSet;
use crate::simstudy::{MspeSweepRow, ReplicationSummary, SurfaceGrid};
use ndarray::Array1;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

/// Largest dataset the CSV parser will accept (the engine targets n ≲ 4000).
pub const MAX_DATA_ROWS: usize = 20_000;

/// 17-significant-digit decimal rendering; round-trips any finite f64.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v:.16e}")
    }
}

fn join_row(fields: &[String]) -> String {
    fields.join(",")
}

/// Tables 1–4 style summary file.
pub fn summaries_csv(rows: &[ReplicationSummary]) -> String {
    let mut out = String::from(
        "setting_id,estimator,quantity,n,p5,p25,p50,p75,p95,bias,sd,n_replicates,n_failed,valid\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.setting_id,
            r.estimator,
            r.quantity,
            r.n,
            format_float(r.p5),
            format_float(r.p25),
            format_float(r.p50),
            format_float(r.p75),
            format_float(r.p95),
            format_float(r.bias),
            format_float(r.sd),
            r.n_replicates,
            r.n_failed,
            r.valid,
        );
    }
    out
}

/// Eigen-decay scan file: one row per (n, α) probe.
pub fn decay_csv(reports: &[crate::eigendiag::DecayReport]) -> String {
    let mut out = String::from("n,alpha,i,lambda,ratio\n");
    for r in reports {
        for k in 0..r.alphas.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.n,
                format_float(r.alphas[k]),
                r.indices[k],
                format_float(r.lambdas[k]),
                format_float(r.ratios[k]),
            );
        }
    }
    out
}

/// Likelihood-surface file in long form.
pub fn surface_csv(s: &SurfaceGrid) -> String {
    let mut out = String::from("fixed,axis1_name,axis1,axis2_name,axis2,value,ok\n");
    for (i, &a1) in s.axis1.iter().enumerate() {
        for (j, &a2) in s.axis2.iter().enumerate() {
            let idx = i * s.axis2.len() + j;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                s.fixed_desc,
                s.axis1_name,
                format_float(a1),
                s.axis2_name,
                format_float(a2),
                format_float(s.values[idx]),
                s.ok[idx],
            );
        }
    }
    out
}

/// Kriging MSPE table.
pub fn mspe_csv(rows: &[MspeSweepRow]) -> String {
    let mut out = String::from("n,s0_1,s0_2,s0_3,model,mspe,mspe_asserted\n");
    for r in rows {
        let mut coords = [String::new(), String::new(), String::new()];
        for (k, c) in r.s0.iter().enumerate().take(3) {
            coords[k] = format_float(*c);
        }
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.n,
            coords[0],
            coords[1],
            coords[2],
            r.model,
            format_float(r.mspe),
            format_float(r.mspe_asserted),
        );
    }
    out
}

/// Dataset file: coordinate columns then the observation.
pub fn dataset_csv(locs: &LocationSet, y: &Array1<f64>) -> String {
    let header = match locs.d() {
        1 => "x,value",
        2 => "x,y,value",
        _ => "x,y,z,value",
    };
    let mut out = String::from(header);
    out.push('\n');
    for i in 0..locs.n() {
        let mut fields: Vec<String> = locs.point(i).iter().map(|&c| format_float(c)).collect();
        fields.push(format_float(y[i]));
        out.push_str(&join_row(&fields));
        out.push('\n');
    }
    out
}

/// Parse a dataset CSV (columns x[,y[,z]],value). Strict: exact header,
/// finite values, coordinates in [0,1], distinct locations, bounded size.
pub fn parse_data_csv(text: &str) -> Result<(LocationSet, Array1<f64>)> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::config("empty dataset file".to_string()))?
        .trim_end_matches('\r');
    let d = match header {
        "x,value" => 1,
        "x,y,value" => 2,
        "x,y,z,value" => 3,
        other => {
            return Err(Error::config(format!(
                "unrecognized dataset header {other:?} (expected x[,y[,z]],value)"
            )))
        }
    };
    let mut coords = Vec::new();
    let mut values = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        if values.len() >= MAX_DATA_ROWS {
            return Err(Error::config(format!(
                "dataset exceeds {MAX_DATA_ROWS} rows"
            )));
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != d + 1 {
            return Err(Error::config(format!(
                "row {}: expected {} fields, got {}",
                lineno + 2,
                d + 1,
                fields.len()
            )));
        }
        for (k, f) in fields.iter().enumerate() {
            let v: f64 = f.trim().parse().map_err(|_| {
                Error::config(format!("row {}: bad number {f:?}", lineno + 2))
            })?;
            if !v.is_finite() {
                return Err(Error::config(format!(
                    "row {}: non-finite value",
                    lineno + 2
                )));
            }
            if k < d {
                coords.push(v);
            } else {
                values.push(v);
            }
        }
    }
    if values.is_empty() {
        return Err(Error::config("dataset has no rows".to_string()));
    }
    let locs = LocationSet::new(d, coords)?;
    Ok((locs, Array1::from_vec(values)))
}

/// Run manifest: everything needed to reproduce a command invocation.
/// Written even on partial failure (with a non-ok status).
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub master_seed: u64,
    pub config: serde_json::Value,
    pub wall_clock_secs: BTreeMap<String, f64>,
    pub outputs: Vec<String>,
    pub status: String,
}

impl RunManifest {
    pub fn new(command: &str, master_seed: u64, config: serde_json::Value) -> Self {
        RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed,
            config,
            wall_clock_secs: BTreeMap::new(),
            outputs: Vec::new(),
            status: "incomplete".to_string(),
        }
    }

    pub fn record_stage(&mut self, stage: &str, secs: f64) {
        self.wall_clock_secs.insert(stage.to_string(), secs);
    }

    pub fn record_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::numeric(format!("manifest serialization: {e}")))?;
        std::fs::write(path, json)?;
        Ok(())
    }
}
