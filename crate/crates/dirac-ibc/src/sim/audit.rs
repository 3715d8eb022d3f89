//! Probability audits: per-sector norms, boundary fluxes through each face,
//! gain terms from sector couplings, and the balance residual between the
//! observed norm drift of a coupling target and the flux into the coupled
//! boundary.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::matrix::CVector;
use crate::sim::model::{ModelSpec, Quadrature, State};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AuditRow {
    pub t: f64,
    pub norm_total: f64,
    pub norm_sector: Vec<f64>,
    /// Normal flux summed over each face (couplings first, then walls, in
    /// model order), with respect to the inward normal.
    pub flux_face: Vec<f64>,
    /// Coupling gain per sector from the exchange terms of the generator.
    pub gain_sector: Vec<f64>,
    /// Worst coupling-balance defect `|d norm_target / dt - loss|`; filled
    /// once the whole series is known.
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AuditReport {
    pub quadrature: Quadrature,
    pub dt: f64,
    pub face_labels: Vec<String>,
    pub rows: Vec<AuditRow>,
}

/// Instantaneous audit quantities of one state.
pub fn audit_state(model: &ModelSpec, state: &State, quad: Quadrature) -> Result<AuditRow> {
    let layout = model.layout();
    let norm_sector: Vec<f64> = (0..model.sectors.len())
        .map(|s| state.sector_norm_sqr(model, s, quad))
        .collect();
    let norm_total = norm_sector.iter().sum();

    let mut flux_face = Vec::new();
    let mut gain_sector = vec![0.0; model.sectors.len()];

    for c in &model.couplings {
        let src = &model.sectors[c.source_sector];
        let an = src.face_boundary_matrix(c.face)?;
        let nodes = src.face_nodes(c.face)?;
        let lam = src.face_weights(c.face, quad)?;
        let mut flux = 0.0;
        for (&b, &w) in nodes.iter().zip(&lam) {
            let psi = state.spinor(model, &layout, c.source_sector, b);
            flux += w * psi.dot(&an.mul_vec(&psi)).re;
        }
        flux_face.push(flux);

        // exchange term of the generator:
        // (2/hbar) Im sum w_t <psi_t, prefactor N^dag psi_b>
        let tgt = &model.sectors[c.target_sector];
        let tw = tgt.node_weights(quad);
        let mut exch = 0.0;
        let nadj = c.n.adjoint();
        for (t_node, b_node, pref) in crate::sim::assemble::coupling_pairs(model, c)? {
            let psi_t = state.spinor(model, &layout, c.target_sector, t_node);
            let psi_b = state.spinor(model, &layout, c.source_sector, b_node);
            let term = psi_t.dot(&nadj.mul_vec(&psi_b));
            exch += (2.0 / model.hbar) * pref * tw[t_node] * term.im;
        }
        gain_sector[c.target_sector] += exch;
    }

    for w in &model.walls {
        let spec = &model.sectors[w.sector];
        let an = spec.face_boundary_matrix(w.face)?;
        let nodes = spec.face_nodes(w.face)?;
        let lam = spec.face_weights(w.face, quad)?;
        let mut flux = 0.0;
        for (&b, &wt) in nodes.iter().zip(&lam) {
            let psi: CVector = state.spinor(model, &layout, w.sector, b);
            flux += wt * psi.dot(&an.mul_vec(&psi)).re;
        }
        flux_face.push(flux);
    }

    Ok(AuditRow {
        t: state.t,
        norm_total,
        norm_sector,
        flux_face,
        gain_sector,
        residual: 0.0,
    })
}

pub fn face_labels(model: &ModelSpec) -> Vec<String> {
    let mut labels = Vec::new();
    for (i, c) in model.couplings.iter().enumerate() {
        labels.push(format!("c{i}_{:?}", c.face));
    }
    for (i, w) in model.walls.iter().enumerate() {
        labels.push(format!("w{i}_{:?}", w.face));
    }
    labels
}

/// Audit a time series of states on a common grid. The residual column
/// compares, for each coupling, the centered time derivative of the target
/// norm with the probability lost through the coupled face
/// (`loss = -flux(inward)`), and keeps the worst coupling.
pub fn audit(model: &ModelSpec, states: &[State], quad: Quadrature) -> Result<AuditReport> {
    let mut rows = Vec::with_capacity(states.len());
    for s in states {
        rows.push(audit_state(model, s, quad)?);
    }
    let dt = if states.len() >= 2 {
        states[1].t - states[0].t
    } else {
        0.0
    };
    let mut report = AuditReport {
        quadrature: quad,
        dt,
        face_labels: face_labels(model),
        rows,
    };
    finalize_residuals(model, &mut report);
    Ok(report)
}

/// Fill the residual column from the completed series.
pub fn finalize_residuals(model: &ModelSpec, report: &mut AuditReport) {
    let n = report.rows.len();
    if n < 2 || report.dt == 0.0 {
        return;
    }
    let dt = report.dt;
    for k in 0..n {
        let mut worst = 0.0f64;
        for (ci, c) in model.couplings.iter().enumerate() {
            let tgt = c.target_sector;
            let deriv = if k == 0 {
                (report.rows[1].norm_sector[tgt] - report.rows[0].norm_sector[tgt]) / dt
            } else if k == n - 1 {
                (report.rows[n - 1].norm_sector[tgt] - report.rows[n - 2].norm_sector[tgt]) / dt
            } else {
                (report.rows[k + 1].norm_sector[tgt] - report.rows[k - 1].norm_sector[tgt])
                    / (2.0 * dt)
            };
            let loss = -report.rows[k].flux_face[ci];
            worst = worst.max((deriv - loss).abs());
        }
        report.rows[k].residual = worst;
    }
}

impl AuditReport {
    /// Largest balance residual over the whole run.
    pub fn max_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.residual).fold(0.0, f64::max)
    }

    /// Relative drift of the total norm over the run.
    pub fn norm_drift(&self) -> f64 {
        let first = self.rows.first().map(|r| r.norm_total).unwrap_or(0.0);
        self.rows
            .iter()
            .map(|r| (r.norm_total - first).abs())
            .fold(0.0, f64::max)
            / first.max(1e-300)
    }

    /// Largest drift of one sector's norm over the run.
    pub fn sector_drift(&self, sector: usize) -> f64 {
        let first = self
            .rows
            .first()
            .map(|r| r.norm_sector[sector])
            .unwrap_or(0.0);
        self.rows
            .iter()
            .map(|r| (r.norm_sector[sector] - first).abs())
            .fold(0.0, f64::max)
    }
}
