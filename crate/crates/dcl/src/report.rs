//! Deterministic CSV/JSON artifact emission.
//!
//! Every writer produces a complete byte string first and lands it on disk
//! atomically (write to a sibling temp file, then rename), so identical
//! inputs yield byte-identical artifacts and readers never observe partial
//! files.

use crate::capacity::SweepResult;
use crate::error::Result;
use crate::scenario::VerdictReport;
use serde::Serialize;
use std::fs;
use std::path::Path;

/// Fixed float formatting: 12 significant digits, scientific notation.
pub fn fmt_g(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    format!("{:.11e}", v)
}

/// Write `bytes` to `path` atomically via a temp file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Capacity table: one row per (mesh level, schedule step).
pub fn capacity_table_csv(sweep: &SweepResult) -> String {
    let mut out = String::from("mesh_level,h,neighborhood_index,epsilon,value,extrapolated,verdict\n");
    for level in &sweep.levels {
        for (k, &(eps, value)) in level.estimate.per_eps.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{:?}\n",
                level.n_elements,
                fmt_g(level.h),
                k,
                fmt_g(eps),
                fmt_g(value),
                fmt_g(level.estimate.extrapolated),
                level.estimate.verdict,
            ));
        }
    }
    out
}

/// Evolution trace: one row per (time, node).
pub fn evolution_csv(trace: &[(f64, Vec<f64>)]) -> String {
    let mut out = String::from("t,node,value\n");
    for (t, values) in trace {
        for (node, &v) in values.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", fmt_g(*t), node, fmt_g(v)));
        }
    }
    out
}

/// One measured defect, traceable to (scenario, time, name).
#[derive(Debug, Clone, Serialize)]
pub struct DefectRecord {
    pub scenario_id: String,
    pub t: f64,
    pub defect: String,
    pub value: f64,
}

/// Pretty JSON with a trailing newline; serde's field order is fixed, so the
/// output is deterministic.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| crate::error::DclError::Config(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// One summary row per scenario of the catalog.
pub fn catalog_summary_csv(reports: &[VerdictReport]) -> String {
    let mut out = String::from(
        "scenario,cond_i,defect_i,cond_ii,defect_ii,cond_iii,capacity,cond_dn,defect_dn,consistent,inconclusive\n",
    );
    for r in reports {
        out.push_str(&format!(
            "{},{:?},{},{:?},{},{:?},{},{:?},{},{},{}\n",
            r.scenario_id,
            r.cond_i,
            fmt_g(r.defect_i),
            r.cond_ii,
            fmt_g(r.defect_ii),
            r.cond_iii,
            fmt_g(r.capacity_extrapolated),
            r.cond_dn,
            fmt_g(r.defect_dn),
            r.consistent,
            r.inconclusive,
        ));
    }
    out
}

/// Plot-ready two-column data (x = mesh size or time, y = quantity).
pub fn plot_csv(x_name: &str, y_name: &str, pairs: &[(f64, f64)]) -> String {
    let mut out = format!("{x_name},{y_name}\n");
    for &(x, y) in pairs {
        out.push_str(&format!("{},{}\n", fmt_g(x), fmt_g(y)));
    }
    out
}
