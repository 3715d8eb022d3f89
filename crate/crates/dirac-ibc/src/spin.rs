//! Standard spin representations and coefficient matrices of Dirac-type
//! operators: gamma/alpha/beta matrices, tensor-product lifts to several
//! particles, and the boundary-normal coefficient matrix.

use crate::error::{Error, Result};
use crate::matrix::{cr, CMatrix, I, ONE, ZERO};

/// A concrete matrix representation of the gamma/alpha/beta algebra for a
/// given spinor dimension and number of spatial directions.
#[derive(Clone, Debug)]
pub struct SpinRep {
    /// Spinor dimension.
    pub r: usize,
    /// Time-like gamma matrix.
    pub gamma0: CMatrix,
    /// Spatial gamma matrices, one per direction.
    pub gammas: Vec<CMatrix>,
    /// Alpha matrices `alpha^k = gamma^0 gamma^k`, one per direction.
    pub alphas: Vec<CMatrix>,
    /// Mass matrix beta.
    pub beta: CMatrix,
}

impl SpinRep {
    pub fn dims(&self) -> usize {
        self.alphas.len()
    }

    /// `n . gamma` for a spatial unit vector `n`.
    pub fn gamma_n(&self, n: &[f64]) -> Result<CMatrix> {
        combine(&self.gammas, n)
    }

    /// `n . alpha` for a spatial unit vector `n`.
    pub fn alpha_n(&self, n: &[f64]) -> Result<CMatrix> {
        normal_matrix(&self.alphas, n)
    }
}

pub fn pauli(k: usize) -> CMatrix {
    match k {
        1 => CMatrix::from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]]),
        2 => CMatrix::from_rows(&[vec![ZERO, -I], vec![I, ZERO]]),
        3 => CMatrix::from_rows(&[vec![ONE, ZERO], vec![ZERO, -ONE]]),
        _ => panic!("pauli index must be 1, 2 or 3"),
    }
}

/// Four-dimensional chiral (Weyl) representation:
/// gamma^0 off-diagonal identity blocks, gamma^k off-diagonal Pauli blocks,
/// alpha^3 = diag(-1, 1, 1, -1).
pub fn weyl_rep() -> SpinRep {
    let id2 = CMatrix::identity(2);
    let zero2 = CMatrix::zeros(2, 2);
    let block = |a: &CMatrix, b: &CMatrix, c_: &CMatrix, d: &CMatrix| -> CMatrix {
        a.hstack(b).vstack(&c_.hstack(d))
    };
    let gamma0 = block(&zero2, &id2, &id2, &zero2);
    let gammas: Vec<CMatrix> = (1..=3)
        .map(|k| {
            let s = pauli(k);
            block(&zero2, &s, &s.scale(-ONE), &zero2)
        })
        .collect();
    let alphas: Vec<CMatrix> = gammas.iter().map(|g| &gamma0 * g).collect();
    SpinRep {
        r: 4,
        beta: gamma0.clone(),
        gamma0,
        gammas,
        alphas,
    }
}

/// Four-dimensional standard (Dirac) representation:
/// alpha^k with off-diagonal Pauli blocks, beta = diag(1, 1, -1, -1).
pub fn dirac_rep() -> SpinRep {
    let id2 = CMatrix::identity(2);
    let zero2 = CMatrix::zeros(2, 2);
    let block = |a: &CMatrix, b: &CMatrix, c_: &CMatrix, d: &CMatrix| -> CMatrix {
        a.hstack(b).vstack(&c_.hstack(d))
    };
    let beta = block(&id2, &zero2, &zero2, &id2.scale(-ONE));
    let alphas: Vec<CMatrix> = (1..=3)
        .map(|k| {
            let s = pauli(k);
            block(&zero2, &s, &s, &zero2)
        })
        .collect();
    let gammas: Vec<CMatrix> = alphas.iter().map(|a| &beta * a).collect();
    SpinRep {
        r: 4,
        gamma0: beta.clone(),
        gammas,
        alphas,
        beta,
    }
}

/// Two-dimensional representation for one space dimension:
/// gamma^0 = beta = sigma_1, gamma^1 = sigma_1 sigma_3, alpha^1 = sigma_3.
pub fn one_d_rep() -> SpinRep {
    let s1 = pauli(1);
    let s3 = pauli(3);
    let gamma1 = &s1 * &s3;
    SpinRep {
        r: 2,
        gamma0: s1.clone(),
        gammas: vec![gamma1],
        alphas: vec![s3],
        beta: s1,
    }
}

/// Lift the alpha matrices of a one-particle representation to the n-fold
/// tensor product: each alpha^k acts on one tensor slot with identities on
/// the others; the returned list is particle-major
/// (all directions of particle 1, then particle 2, ...).
pub fn tensor_alphas(rep: &SpinRep, n_particles: usize) -> Result<Vec<CMatrix>> {
    if n_particles == 0 {
        return Err(Error::InvalidInput(
            "tensor_alphas needs at least one particle".into(),
        ));
    }
    let id = CMatrix::identity(rep.r);
    let mut out = Vec::with_capacity(rep.dims() * n_particles);
    for p in 0..n_particles {
        for alpha in &rep.alphas {
            let mut m = CMatrix::identity(1);
            for slot in 0..n_particles {
                let factor = if slot == p { alpha } else { &id };
                m = m.kron(factor);
            }
            out.push(m);
        }
    }
    Ok(out)
}

fn combine(mats: &[CMatrix], n: &[f64]) -> Result<CMatrix> {
    if mats.len() != n.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficient matrices but normal vector of dimension {}",
            mats.len(),
            n.len()
        )));
    }
    let dim = mats[0].rows();
    let mut out = CMatrix::zeros(dim, dim);
    for (m, &nk) in mats.iter().zip(n) {
        out = &out + &m.scale(cr(nk));
    }
    Ok(out)
}

pub const UNIT_VECTOR_TOL: f64 = 1e-10;

/// Boundary-normal coefficient matrix `A^n = sum_a n^a A^a` for a unit
/// vector `n` (flat metric). The result is Hermitian whenever the
/// coefficient matrices are.
pub fn normal_matrix(alphas: &[CMatrix], n: &[f64]) -> Result<CMatrix> {
    let len: f64 = n.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (len - 1.0).abs() > UNIT_VECTOR_TOL {
        return Err(Error::InvalidInput(format!(
            "normal vector must have unit length, got |n| = {len}"
        )));
    }
    combine(alphas, n)
}
