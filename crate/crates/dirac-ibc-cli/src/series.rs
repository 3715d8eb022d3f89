//! The time-series CSV written by `simulate` and re-read by `audit`.
//! All floating-point values carry 17 significant digits, which round-trips
//! doubles exactly.

use std::io::Write;
use std::path::Path;

use dirac_ibc::sim::audit::AuditReport;

pub fn header(report: &AuditReport) -> String {
    let mut cols = vec!["t".to_string(), "norm_total".to_string()];
    let sectors = report
        .rows
        .first()
        .map(|r| r.norm_sector.len())
        .unwrap_or(0);
    for s in 0..sectors {
        cols.push(format!("norm_s{s}"));
    }
    for f in 0..report.face_labels.len() {
        cols.push(format!("flux_f{f}"));
    }
    for s in 0..sectors {
        cols.push(format!("gain_s{s}"));
    }
    cols.push("residual".into());
    cols.join(",")
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv(path: &Path, report: &AuditReport) -> std::io::Result<()> {
    let mut out = String::new();
    out.push_str(&header(report));
    out.push('\n');
    for row in &report.rows {
        let mut cols = vec![fmt(row.t), fmt(row.norm_total)];
        cols.extend(row.norm_sector.iter().map(|&v| fmt(v)));
        cols.extend(row.flux_face.iter().map(|&v| fmt(v)));
        cols.extend(row.gain_sector.iter().map(|&v| fmt(v)));
        cols.push(fmt(row.residual));
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(out.as_bytes())
}

/// Parsed CSV rows, column labels included.
pub struct Series {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn read_csv(path: &Path) -> Result<Series, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut lines = text.lines();
    let columns: Vec<String> = lines
        .next()
        .ok_or("empty series file")?
        .split(',')
        .map(|s| s.to_string())
        .collect();
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(|v| v.parse::<f64>()).collect();
        let row = row.map_err(|e| format!("row {}: {e}", k + 2))?;
        if row.len() != columns.len() {
            return Err(format!("row {} has {} columns, expected {}", k + 2, row.len(), columns.len()));
        }
        rows.push(row);
    }
    Ok(Series { columns, rows })
}
