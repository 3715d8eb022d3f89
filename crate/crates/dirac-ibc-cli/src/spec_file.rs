//! On-disk JSON formats: boundary-condition spec files, model files with
//! initial states, and machine-readable reports.

use serde::{Deserialize, Serialize};

use dirac_ibc::matrix::cr;
use dirac_ibc::sim::{
    gaussian_state, point_excited_state, ModelSpec, Quadrature, Snapshot, State,
};
use dirac_ibc::CMatrix;

/// Versioned wrapper; unknown fields are rejected so that typos fail loudly.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub kind: String,
    pub schema_version: String,
    pub payload: serde_json::Value,
}

pub const SCHEMA_VERSION: &str = "1";

/// A reflecting boundary condition: the Hermitian boundary matrix and the
/// unitary mode map stored on the ambient spin space.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReflectingPayload {
    pub an: CMatrix,
    pub l: CMatrix,
}

/// An interior-boundary condition; the mode map lives on the product of the
/// boundary fiber and the interior fiber, in ambient coordinates (boundary
/// coordinates first). `block_order` documents the ordering convention of
/// the block-diagonalized conservation form in reports.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IbcPayload {
    #[serde(rename = "An")]
    pub an: CMatrix,
    #[serde(rename = "N")]
    pub n: CMatrix,
    pub hbar: f64,
    #[serde(rename = "Ltilde")]
    pub ltilde: CMatrix,
    pub block_order: Vec<String>,
}

/// The self-adjoint 2x2 wall parameter matrix as plain numbers.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TPayload {
    pub a: f64,
    pub b: [f64; 2],
    pub c: f64,
}

/// `P^- psi = C P^+ psi` parametrization.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CPayload {
    pub an: CMatrix,
    pub c: CMatrix,
}

/// A simulation model plus its initial state.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelPayload {
    pub model: ModelSpec,
    pub initial: InitialState,
    /// Normalize the initial state before the run (default true).
    #[serde(default = "default_true")]
    pub normalize: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    Snapshot {
        snapshot: Snapshot,
    },
    Gaussian {
        sector: usize,
        comp: usize,
        center: f64,
        sigma: f64,
        #[serde(default)]
        momentum: f64,
    },
    PointAmplitude {
        sector: usize,
    },
    Sum {
        parts: Vec<InitialState>,
    },
}

impl InitialState {
    pub fn build(&self, model: &ModelSpec) -> Result<State, dirac_ibc::Error> {
        match self {
            InitialState::Snapshot { snapshot } => snapshot.clone().into_state(model),
            InitialState::Gaussian {
                sector,
                comp,
                center,
                sigma,
                momentum,
            } => gaussian_state(model, *sector, *comp, *center, *sigma, *momentum),
            InitialState::PointAmplitude { sector } => point_excited_state(model, *sector),
            InitialState::Sum { parts } => {
                let mut acc = State::zeros(model);
                for p in parts {
                    let s = p.build(model)?;
                    for (a, b) in acc.data.iter_mut().zip(&s.data) {
                        *a += *b;
                    }
                }
                Ok(acc)
            }
        }
    }
}

pub fn build_initial(payload: &ModelPayload) -> Result<State, dirac_ibc::Error> {
    let mut st = payload.initial.build(&payload.model)?;
    if payload.normalize {
        let norm = st
            .total_norm_sqr(&payload.model, Quadrature::Trapezoid)
            .sqrt();
        if norm > 0.0 {
            for v in st.data.iter_mut() {
                *v /= cr(norm);
            }
        }
    }
    Ok(st)
}

/// One named check with its numeric evidence.
#[derive(Serialize, Deserialize, Clone)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
}

/// Machine-readable verdicts; the human text rendering is derived from this.
#[derive(Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub ok: bool,
    pub seed: u64,
    pub tol: f64,
    pub checks: Vec<Check>,
    pub data: serde_json::Value,
}

impl Report {
    pub fn new(command: &str, seed: u64, tol: f64) -> Self {
        Report {
            command: command.into(),
            ok: true,
            seed,
            tol,
            checks: Vec::new(),
            data: serde_json::Value::Null,
        }
    }

    pub fn push(&mut self, name: &str, passed: bool, value: f64) {
        self.ok &= passed;
        self.checks.push(Check {
            name: name.into(),
            passed,
            value,
        });
    }

    /// JSON to stdout (the source of truth), text summary to stderr.
    pub fn emit(&self) {
        println!(
            "{}",
            serde_json::to_string_pretty(self).expect("report serializes")
        );
        for c in &self.checks {
            eprintln!(
                "[{}] {} ({:.3e})",
                if c.passed { "pass" } else { "FAIL" },
                c.name,
                c.value
            );
        }
        eprintln!("{}: {}", self.command, if self.ok { "ok" } else { "FAILED" });
    }
}
