//! Time evolution: the implicit midpoint (Cayley) step on the constrained
//! subspace, and the run driver producing audit series.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{I, ZERO};
use crate::sim::assemble::{assemble, DiscreteHamiltonian};
use crate::sim::audit::{audit_state, face_labels, finalize_residuals, AuditReport};
use crate::sim::characteristics::evolve_characteristics_with;
use crate::sim::model::{ModelSpec, Quadrature, State};
use crate::sim::sparse::{cg_shifted_hsq, norm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Cn,
    Characteristics,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cn" => Ok(Method::Cn),
            "characteristics" => Ok(Method::Characteristics),
            other => Err(Error::InvalidInput(format!(
                "unknown method '{other}' (expected 'cn' or 'characteristics')"
            ))),
        }
    }
}

pub struct RunOutput {
    pub final_state: State,
    pub report: AuditReport,
}

const CG_TOL: f64 = 1e-15;
const CG_MAX_ITER: usize = 400;

/// One Cayley step on constrained-subspace coordinates:
/// `(1 + i dt H / 2 hbar) c' = (1 - i dt H / 2 hbar) c`.
/// Exactly norm preserving up to the linear-solve tolerance.
pub fn step_cn_coords(
    dh: &DiscreteHamiltonian,
    coords: &mut Vec<Complex64>,
    dt: f64,
    hbar: f64,
) -> Result<()> {
    let gamma = dt / (2.0 * hbar);
    let n = coords.len();
    let hc = dh.h.matvec(coords);
    // rhs = (1 - i g H) c
    let mut rhs = vec![ZERO; n];
    for i in 0..n {
        rhs[i] = coords[i] - I * hc[i].scale(gamma);
    }
    // normal equations: (1 + g^2 H^2) c' = (1 - i g H) rhs
    let hrhs = dh.h.matvec(&rhs);
    let mut b = vec![ZERO; n];
    for i in 0..n {
        b[i] = rhs[i] - I * hrhs[i].scale(gamma);
    }
    let (x, _res, _iters) = cg_shifted_hsq(&dh.h, gamma, &b, CG_TOL, CG_MAX_ITER)?;
    // defensive check on the original system
    let hx = dh.h.matvec(&x);
    let mut worst = 0.0f64;
    for i in 0..n {
        let ax = x[i] + I * hx[i].scale(gamma);
        worst += (ax - rhs[i]).norm_sqr();
    }
    let rhs_norm = norm(&rhs);
    if worst.sqrt() > 1e-10 * rhs_norm.max(1e-300) {
        return Err(Error::SingularSystem {
            value: worst.sqrt() / rhs_norm.max(1e-300),
        });
    }
    *coords = x;
    Ok(())
}

/// State-level Cayley step: project into the constrained subspace, advance,
/// expand.
pub fn step_cn(
    dh: &DiscreteHamiltonian,
    model: &ModelSpec,
    state: &State,
    dt: f64,
) -> Result<State> {
    let mut coords = dh.project(state);
    step_cn_coords(dh, &mut coords, dt, model.hbar)?;
    Ok(dh.expand(&coords, state.t + dt))
}

/// Evolve for `steps` steps of size `dt`, recording an audit row at every
/// step (including the initial state). `on_state` sees every state in order,
/// step index first.
pub fn run_with(
    model: &ModelSpec,
    psi0: &State,
    steps: usize,
    dt: f64,
    method: Method,
    mut on_state: impl FnMut(usize, &State),
) -> Result<RunOutput> {
    match method {
        Method::Cn => {
            let dh = assemble(model)?;
            let mut coords = dh.project(psi0);
            let mut rows = Vec::with_capacity(steps + 1);
            let state0 = dh.expand(&coords, psi0.t);
            rows.push(audit_state(model, &state0, Quadrature::Trapezoid)?);
            on_state(0, &state0);
            let mut t = psi0.t;
            let mut last = state0;
            for step in 1..=steps {
                step_cn_coords(&dh, &mut coords, dt, model.hbar)?;
                t += dt;
                let state = dh.expand(&coords, t);
                rows.push(audit_state(model, &state, Quadrature::Trapezoid)?);
                on_state(step, &state);
                last = state;
            }
            let mut report = AuditReport {
                quadrature: Quadrature::Trapezoid,
                dt,
                face_labels: face_labels(model),
                rows,
            };
            finalize_residuals(model, &mut report);
            Ok(RunOutput {
                final_state: last,
                report,
            })
        }
        Method::Characteristics => evolve_characteristics_with(model, psi0, steps, dt, on_state),
    }
}

/// Convenience wrapper without a state callback.
pub fn run(
    model: &ModelSpec,
    psi0: &State,
    steps: usize,
    dt: f64,
    method: Method,
) -> Result<RunOutput> {
    run_with(model, psi0, steps, dt, method, |_, _| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::c;
    use crate::sim::builtin::{builtin_interval, gaussian_state};

    #[test]
    fn cayley_step_preserves_norm_and_is_identity_for_zero_generator() {
        let model = builtin_interval(1.0, 0.05, 0.0, 0.0, 0.0, 1.0).unwrap();
        let dh = assemble(&model).unwrap();
        let mut coords: Vec<_> = (0..dh.vdim)
            .map(|k| c((0.3 * k as f64).sin(), (0.17 * k as f64).cos()))
            .collect();
        let before: f64 = coords.iter().map(|v| v.norm_sqr()).sum();
        step_cn_coords(&dh, &mut coords, 0.025, 1.0).unwrap();
        let after: f64 = coords.iter().map(|v| v.norm_sqr()).sum();
        assert!((before - after).abs() < 1e-12 * before);

        // zero step leaves coordinates unchanged
        let snapshot = coords.clone();
        step_cn_coords(&dh, &mut coords, 0.0, 1.0).unwrap();
        for (a, b) in coords.iter().zip(&snapshot) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn free_pulse_advances_at_unit_speed() {
        let dx = 1.0 / 100.0;
        let model = builtin_interval(1.0, dx, 0.0, 0.0, 0.0, 1.0).unwrap();
        let psi0 = gaussian_state(&model, 0, 0, 0.3, 0.05, 0.0).unwrap();
        let steps = 40;
        let dt = dx / 2.0;
        let out = run(&model, &psi0, steps, dt, Method::Cn).unwrap();
        assert!(out.report.norm_drift() < 1e-10);
        // center of mass moved right by about steps*dt = 0.2
        let layout = model.layout();
        let center = |st: &State| -> f64 {
            let mut m = 0.0;
            let mut x = 0.0;
            for node in 0..model.sectors[0].node_count() {
                let p = st.spinor(&model, &layout, 0, node).norm_sqr();
                m += p;
                x += p * (node as f64) * dx;
            }
            x / m
        };
        let moved = center(&out.final_state) - center(&psi0);
        assert!(
            (moved - steps as f64 * dt).abs() < 0.02,
            "pulse moved {moved}, expected {}",
            steps as f64 * dt
        );
    }
}
