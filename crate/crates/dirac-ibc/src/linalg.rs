//! Small dense complex linear algebra: Hermitian eigendecomposition,
//! singular value decomposition, and linear solves.
//!
//! All routines are deterministic (fixed sweep order, no randomization), which
//! keeps spectral projectors and derived boundary data reproducible across
//! runs. Matrices here are small (spin-space and boundary-mode dimensions),
//! so cyclic Jacobi iterations are accurate and fast enough.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{CMatrix, CVector, ZERO};

const MAX_SWEEPS: usize = 64;
const EPS: f64 = f64::EPSILON;

/// Hermitian eigendecomposition, eigenvalues ascending.
pub struct Eigh {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, aligned with `values`.
    pub vectors: CMatrix,
}

/// Thin singular value decomposition `m = u * diag(sigma) * v^dagger`,
/// singular values descending.
pub struct Svd {
    pub u: CMatrix,
    pub sigma: Vec<f64>,
    pub v: CMatrix,
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
///
/// The input is symmetrized first, so entry-level deviations from Hermiticity
/// up to the caller's tolerance are absorbed; larger deviations are an error.
pub fn eigh(a: &CMatrix, herm_tol: f64) -> Result<Eigh> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    a.check_hermitian(herm_tol)?;
    let n = a.rows();
    if n == 0 {
        return Ok(Eigh {
            values: vec![],
            vectors: CMatrix::zeros(0, 0),
        });
    }

    let mut m = CMatrix::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5);
    let mut v = CMatrix::identity(n);
    let scale = m.max_abs().max(1e-300);

    for sweep in 0..=MAX_SWEEPS {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m[(p, q)].norm());
            }
        }
        if off <= 16.0 * EPS * scale {
            break;
        }
        if sweep == MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps: MAX_SWEEPS });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let mag = apq.norm();
                if mag <= EPS * scale * 1e-2 {
                    continue;
                }
                let phase = apq / mag;
                let alpha = m[(p, p)].re;
                let gamma = m[(q, q)].re;
                let tau = (gamma - alpha) / (2.0 * mag);
                let t = -tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                rotate_similarity(&mut m, &mut v, p, q, c, s, phase);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let vectors = v.select_columns(&order);
    Ok(Eigh { values, vectors })
}

/// Apply the unitary similarity that zeroes the (p, q) entry:
/// columns (p, q) mix by the plane rotation, rows by its adjoint,
/// and the accumulated `v` picks up the column transform.
fn rotate_similarity(
    m: &mut CMatrix,
    v: &mut CMatrix,
    p: usize,
    q: usize,
    c: f64,
    s: f64,
    phase: Complex64,
) {
    let n = m.rows();
    // A <- A U with U[p,p]=c, U[p,q]=-s, U[q,p]=conj(phase)*s,
    // U[q,q]=conj(phase)*c, which reduces the 2x2 block to the real case
    for i in 0..n {
        let aip = m[(i, p)];
        let aiq = m[(i, q)];
        m[(i, p)] = aip * c + aiq * (phase.conj() * s);
        m[(i, q)] = aip * (-s) + aiq * (phase.conj() * c);
    }
    // A <- U^dagger A
    for j in 0..n {
        let apj = m[(p, j)];
        let aqj = m[(q, j)];
        m[(p, j)] = apj * c + aqj * (phase * s);
        m[(q, j)] = apj * (-s) + aqj * (phase * c);
    }
    m[(p, q)] = ZERO;
    m[(q, p)] = ZERO;
    m[(p, p)] = Complex64::new(m[(p, p)].re, 0.0);
    m[(q, q)] = Complex64::new(m[(q, q)].re, 0.0);
    for i in 0..v.rows() {
        let vip = v[(i, p)];
        let viq = v[(i, q)];
        v[(i, p)] = vip * c + viq * (phase.conj() * s);
        v[(i, q)] = vip * (-s) + viq * (phase.conj() * c);
    }
}

/// One-sided Jacobi SVD (Hestenes): orthogonalize column pairs until the
/// columns of the working matrix are mutually orthogonal.
pub fn svd(a: &CMatrix) -> Svd {
    let m = a.rows();
    let n = a.cols();
    let mut b = a.clone();
    let mut v = CMatrix::identity(n);

    // Columns this far below the matrix scale carry numerically-zero
    // singular values; rotating them is pointless and, deep in the denormal
    // range, the computed rotation phase loses its unit modulus and corrupts
    // the accumulated right factor.
    let scale = (0..n).map(|j| b.column(j).norm()).fold(0.0, f64::max);
    let floor_sqr = (scale * 1e-120).powi(2);

    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let bp = b.column(p);
                let bq = b.column(q);
                let app = bp.norm_sqr();
                let aqq = bq.norm_sqr();
                let apq = bp.dot(&bq);
                let mag = apq.norm();
                if app <= floor_sqr
                    || aqq <= floor_sqr
                    || mag <= 4.0 * EPS * (app * aqq).sqrt()
                {
                    continue;
                }
                rotated = true;
                let phase = {
                    let raw = apq / mag;
                    raw / crate::matrix::cr(raw.norm())
                };
                let tau = (aqq - app) / (2.0 * mag);
                let t = -tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for i in 0..m {
                    let bip = b[(i, p)];
                    let biq = b[(i, q)];
                    b[(i, p)] = bip * c + biq * (phase.conj() * s);
                    b[(i, q)] = bip * (-s) + biq * (phase.conj() * c);
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * c + viq * (phase.conj() * s);
                    v[(i, q)] = vip * (-s) + viq * (phase.conj() * c);
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sigma: Vec<f64> = (0..n).map(|j| b.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap());
    let b = b.select_columns(&order);
    let v = v.select_columns(&order);
    sigma = order.iter().map(|&i| sigma[i]).collect();

    let mut u = CMatrix::zeros(m, n);
    for j in 0..n {
        if sigma[j] > 0.0 {
            let col = b.column(j).scale(crate::matrix::cr(1.0 / sigma[j]));
            u.set_column(j, &col);
        }
    }
    Svd { u, sigma, v }
}

/// Relative rank threshold used for kernel and rank decisions.
pub const RANK_RTOL: f64 = 1e-10;

impl Svd {
    pub fn rank(&self, rtol: f64) -> usize {
        let smax = self.sigma.first().copied().unwrap_or(0.0);
        if smax == 0.0 {
            return 0;
        }
        self.sigma.iter().filter(|&&s| s > rtol * smax).count()
    }
}

/// Orthonormal basis of the null space of `a` (right singular vectors with
/// singular value below `rtol * sigma_max`). Returns an `n x k` matrix.
pub fn nullspace(a: &CMatrix, rtol: f64) -> CMatrix {
    let n = a.cols();
    let dec = svd(a);
    let r = dec.rank(rtol);
    let idx: Vec<usize> = (r..n).collect();
    dec.v.select_columns(&idx)
}

/// Orthonormal basis of the column space of `a`.
pub fn column_space(a: &CMatrix, rtol: f64) -> CMatrix {
    let dec = svd(a);
    let r = dec.rank(rtol);
    let idx: Vec<usize> = (0..r).collect();
    dec.u.select_columns(&idx)
}

/// Solve `a x = b` by LU with partial pivoting; `b` may have several columns.
pub fn solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if !a.is_square() || a.rows() != b.rows() {
        return Err(Error::DimensionMismatch(format!(
            "solve: {}x{} vs rhs {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let n = a.rows();
    let mut lu = a.clone();
    let mut x = b.clone();
    let scale = a.max_abs().max(1e-300);

    for k in 0..n {
        let (mut piv, mut pmag) = (k, lu[(k, k)].norm());
        for i in (k + 1)..n {
            let mag = lu[(i, k)].norm();
            if mag > pmag {
                piv = i;
                pmag = mag;
            }
        }
        if pmag <= 1e4 * EPS * scale {
            return Err(Error::SingularSystem { value: pmag });
        }
        if piv != k {
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(piv, j)];
                lu[(piv, j)] = t;
            }
            for j in 0..x.cols() {
                let t = x[(k, j)];
                x[(k, j)] = x[(piv, j)];
                x[(piv, j)] = t;
            }
        }
        let pivot = lu[(k, k)];
        for i in (k + 1)..n {
            let f = lu[(i, k)] / pivot;
            if f == ZERO {
                continue;
            }
            lu[(i, k)] = f;
            for j in (k + 1)..n {
                let lkj = lu[(k, j)];
                lu[(i, j)] -= f * lkj;
            }
            for j in 0..x.cols() {
                let xkj = x[(k, j)];
                x[(i, j)] -= f * xkj;
            }
        }
    }
    // back substitution
    for j in 0..x.cols() {
        for i in (0..n).rev() {
            let mut acc = x[(i, j)];
            for k in (i + 1)..n {
                acc -= lu[(i, k)] * x[(k, j)];
            }
            x[(i, j)] = acc / lu[(i, i)];
        }
    }
    Ok(x)
}

pub fn solve_vec(a: &CMatrix, b: &CVector) -> Result<CVector> {
    let x = solve(a, &b.as_column())?;
    Ok(x.column(0))
}

/// Minimum-norm least-squares solution via the SVD pseudoinverse.
pub fn lstsq(a: &CMatrix, b: &CVector, rtol: f64) -> (CVector, f64) {
    let dec = svd(a);
    let smax = dec.sigma.first().copied().unwrap_or(0.0);
    let mut x = CVector::zeros(a.cols());
    for j in 0..dec.sigma.len() {
        let s = dec.sigma[j];
        if smax == 0.0 || s <= rtol * smax {
            continue;
        }
        let coeff = dec.u.column(j).dot(b) / s;
        x = x.add(&dec.v.column(j).scale(coeff));
    }
    let residual = a.mul_vec(&x).sub(b).norm();
    (x, residual)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{c, cr, I};

    fn reconstruct(e: &Eigh) -> CMatrix {
        let n = e.values.len();
        let mut out = CMatrix::zeros(n, n);
        for k in 0..n {
            let vk = e.vectors.column(k);
            out = &out + &vk.outer(&vk).scale(cr(e.values[k]));
        }
        out
    }

    #[test]
    fn eigh_diagonalizes_pauli_like_matrix() {
        // [[1, i], [-i, -1]] has eigenvalues +-sqrt(2)
        let a = CMatrix::from_rows(&[vec![cr(1.0), I], vec![-I, cr(-1.0)]]);
        let e = eigh(&a, 1e-12).unwrap();
        assert!((e.values[0] + 2.0f64.sqrt()).abs() < 1e-14);
        assert!((e.values[1] - 2.0f64.sqrt()).abs() < 1e-14);
        assert!(reconstruct(&e).approx_eq(&a, 1e-13));
        let g = &e.vectors.adjoint() * &e.vectors;
        assert!(g.approx_eq(&CMatrix::identity(2), 1e-13));
    }

    #[test]
    fn eigh_handles_degenerate_spectrum() {
        let a = CMatrix::real_diagonal(&[-1.0, 1.0, 1.0, -1.0]);
        let e = eigh(&a, 0.0).unwrap();
        assert_eq!(e.values, vec![-1.0, -1.0, 1.0, 1.0]);
        assert!(reconstruct(&e).approx_eq(&a, 1e-14));
    }

    #[test]
    fn svd_rank_and_nullspace() {
        // rank-1 matrix with a known kernel
        let a = CMatrix::from_rows(&[vec![cr(1.0), cr(2.0)], vec![c(0.0, 3.0), c(0.0, 6.0)]]);
        let dec = svd(&a);
        assert_eq!(dec.rank(RANK_RTOL), 1);
        let ns = nullspace(&a, RANK_RTOL);
        assert_eq!(ns.cols(), 1);
        assert!((&a * &ns).max_abs() < 1e-14);
        // reconstruction
        let mut rec = CMatrix::zeros(2, 2);
        for j in 0..2 {
            let uj = dec.u.column(j);
            let vj = dec.v.column(j);
            rec = &rec + &uj.outer(&vj).scale(cr(dec.sigma[j]));
        }
        assert!(rec.approx_eq(&a, 1e-13));
    }

    #[test]
    fn solve_recovers_known_solution() {
        let a = CMatrix::from_rows(&[
            vec![cr(2.0), I, cr(0.0)],
            vec![-I, cr(3.0), cr(1.0)],
            vec![cr(0.0), cr(1.0), cr(1.5)],
        ]);
        let x = CVector::from_slice(&[c(1.0, -1.0), c(0.5, 2.0), cr(-3.0)]);
        let b = a.mul_vec(&x);
        let got = solve_vec(&a, &b).unwrap();
        assert!(got.approx_eq(&x, 1e-12));
    }

    #[test]
    fn solve_reports_singular_matrix() {
        let a = CMatrix::from_rows(&[vec![cr(1.0), cr(2.0)], vec![cr(2.0), cr(4.0)]]);
        let b = CVector::from_slice(&[cr(1.0), cr(1.0)]);
        assert!(matches!(
            solve_vec(&a, &b),
            Err(Error::SingularSystem { .. })
        ));
    }
}
