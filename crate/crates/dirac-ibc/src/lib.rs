//! Construction, certification, and desk-scale simulation of reflecting
//! boundary conditions and interior-boundary conditions (IBCs) for
//! Dirac-type operators, i.e. first-order differential operators with
//! Hermitian matrix coefficients.
//!
//! The crate is organized around the algebra at a single boundary point:
//!
//! * [`spin`] — standard spin representations and coefficient matrices;
//! * [`split`] — spectral splitting of the boundary-normal matrix into
//!   kernel, incoming and outgoing mode spaces;
//! * [`lagrangian`] — complete Lagrangian subspaces and their one-to-one
//!   correspondence with unitary mode maps (reflecting boundary conditions);
//! * [`catalog`] — named boundary conditions (MIT bag, interval phase
//!   conditions, the Al-Hashimi–Wiese family, ...) and plane-wave reflection;
//! * [`ibc`] — interior-boundary conditions coupling a boundary value to the
//!   wave function of another sector, with pointwise conservation checks;
//! * [`sim`] — discretized multi-sector models: Hamiltonian assembly under
//!   boundary constraints, norm-conserving time evolution, an exact-transport
//!   oracle for massless models, and probability audits.

pub mod error;
pub mod matrix;
pub mod linalg;
pub mod spin;
pub mod split;
pub mod lagrangian;
pub mod catalog;
pub mod ibc;
pub mod sim;

pub use error::{Error, Result};
pub use matrix::{CMatrix, CVector};
