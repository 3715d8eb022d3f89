//! Discretized multi-sector models: grids, Hamiltonian assembly under
//! boundary constraints, norm-conserving time evolution, an exact-transport
//! oracle for massless models, and probability audits.

pub mod model;
pub mod sparse;
pub mod assemble;
pub mod evolve;
pub mod characteristics;
pub mod audit;
pub mod builtin;

pub use assemble::{assemble, DiscreteHamiltonian};
pub use audit::{audit, AuditReport};
pub use builtin::{
    builtin_interval, builtin_lienert_nickel, builtin_point_source, gaussian_state,
    point_excited_state,
};
pub use characteristics::evolve_characteristics;
pub use evolve::{run, run_with, step_cn, Method, RunOutput};
pub use model::{
    CouplingMap, CouplingSpec, Face, Geometry, ModelSpec, Quadrature, SectorSpec, Snapshot,
    State, WallSpec,
};
