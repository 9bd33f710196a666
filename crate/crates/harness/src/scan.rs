//! Periodic-orbit scans over the twist parameter.

use serde::{Deserialize, Serialize};
use spiralwave_core::motion::{find_periodic_orbit, OrbitOptions};
use std::io::Write;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub q: f64,
    pub orbit_found: bool,
    pub crossing_x: Option<f64>,
    pub period: Option<f64>,
    /// Set when the search itself failed; the scan carries on.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanDiagnostics {
    /// Crossing points of the found orbits increase with `q`.
    pub monotone_growth: bool,
    pub failures: usize,
}

pub fn run_bifurcation_scan(q_list: &[f64], cfg: &ExperimentConfig) -> Result<Vec<ScanRow>> {
    if let Some(q) = q_list.iter().find(|q| !(**q > 0.0 && **q <= 0.5)) {
        return Err(HarnessError::Validation(format!("scan twist {q} outside (0, 0.5]")));
    }
    let opts = cfg.orbit.clone().unwrap_or_default();
    Ok(q_list.iter().map(|&q| scan_one(q, cfg, &opts)).collect())
}

fn scan_one(q: f64, cfg: &ExperimentConfig, opts: &OrbitOptions) -> ScanRow {
    match find_periodic_orbit(&cfg.motion_params(q, 1), opts) {
        Ok(Some(o)) => {
            ScanRow { q, orbit_found: true, crossing_x: Some(o.crossing_x), period: Some(o.period), error: None }
        }
        Ok(None) => ScanRow { q, orbit_found: false, crossing_x: None, period: None, error: None },
        Err(e) => ScanRow { q, orbit_found: false, crossing_x: None, period: None, error: Some(e.to_string()) },
    }
}

pub fn diagnostics(rows: &[ScanRow]) -> ScanDiagnostics {
    let mut found: Vec<(f64, f64)> = rows.iter().filter_map(|r| r.crossing_x.map(|x| (r.q, x))).collect();
    found.sort_by(|a, b| a.0.total_cmp(&b.0));
    ScanDiagnostics {
        monotone_growth: found.windows(2).all(|w| w[1].1 > w[0].1),
        failures: rows.iter().filter(|r| r.error.is_some()).count(),
    }
}

/// Writes `q,orbit_found,crossing_x,period`; missing values are empty.
pub fn write_scan_csv<W: Write>(rows: &[ScanRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["q", "orbit_found", "crossing_x", "period"])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        out.write_record([r.q.to_string(), r.orbit_found.to_string(), opt(r.crossing_x), opt(r.period)])?;
    }
    out.flush().map_err(HarnessError::from)
}
