//! Spectral splitting of a Hermitian boundary matrix into its kernel and its
//! positive/negative spectral subspaces, together with the partial inverse
//! and the spectral square roots used by boundary-condition constructions.

use crate::error::Result;
use crate::linalg::{eigh, Eigh};
use crate::matrix::{cr, CMatrix};

/// Tolerance for accepting a matrix as Hermitian.
pub const HERM_TOL: f64 = 1e-10;
/// Default tolerance for assigning an eigenvalue to the kernel.
pub const DEFAULT_ZERO_TOL: f64 = 1e-10;

/// Spectral decomposition of a Hermitian boundary matrix.
///
/// Eigenvalues within `zero_tol` of zero form the kernel; the rest split by
/// sign. Projectors and restrictions are stored as matrices on the ambient
/// space (supported on the corresponding subspaces).
#[derive(Clone, Debug)]
pub struct HermitianSplit {
    /// The boundary matrix itself (symmetrized copy of the input).
    pub a: CMatrix,
    /// Orthogonal projector onto the kernel.
    pub p0: CMatrix,
    /// Orthogonal projector onto the positive spectral subspace.
    pub pplus: CMatrix,
    /// Orthogonal projector onto the negative spectral subspace.
    pub pminus: CMatrix,
    /// Restriction of `a` to the positive subspace (ambient-supported).
    pub aplus: CMatrix,
    /// Restriction of `a` to the negative subspace (ambient-supported).
    pub aminus: CMatrix,
    /// Inverse of `a` on the orthogonal complement of its kernel.
    pub ainv: CMatrix,
    /// Eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenbasis, columns aligned with `eigenvalues`.
    pub eigenvectors: CMatrix,
    pub zero_tol: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Class {
    Minus,
    Zero,
    Plus,
}

impl HermitianSplit {
    pub fn new(a: &CMatrix, zero_tol: f64) -> Result<Self> {
        let Eigh { values, vectors } = eigh(a, HERM_TOL)?;
        let n = a.rows();
        let sym = CMatrix::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5);

        let class = |v: f64| -> Class {
            if v.abs() <= zero_tol {
                Class::Zero
            } else if v > 0.0 {
                Class::Plus
            } else {
                Class::Minus
            }
        };

        let mut p0 = CMatrix::zeros(n, n);
        let mut pplus = CMatrix::zeros(n, n);
        let mut pminus = CMatrix::zeros(n, n);
        let mut aplus = CMatrix::zeros(n, n);
        let mut aminus = CMatrix::zeros(n, n);
        let mut ainv = CMatrix::zeros(n, n);
        for (k, &lambda) in values.iter().enumerate() {
            let v = vectors.column(k);
            let proj = v.outer(&v);
            match class(lambda) {
                Class::Zero => p0 = &p0 + &proj,
                Class::Plus => {
                    pplus = &pplus + &proj;
                    aplus = &aplus + &proj.scale(cr(lambda));
                    ainv = &ainv + &proj.scale(cr(1.0 / lambda));
                }
                Class::Minus => {
                    pminus = &pminus + &proj;
                    aminus = &aminus + &proj.scale(cr(lambda));
                    ainv = &ainv + &proj.scale(cr(1.0 / lambda));
                }
            }
        }

        Ok(HermitianSplit {
            a: sym,
            p0,
            pplus,
            pminus,
            aplus,
            aminus,
            ainv,
            eigenvalues: values,
            eigenvectors: vectors,
            zero_tol,
        })
    }

    pub fn with_default_tol(a: &CMatrix) -> Result<Self> {
        Self::new(a, DEFAULT_ZERO_TOL)
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    fn count(&self, which: Class) -> usize {
        self.eigenvalues
            .iter()
            .filter(|&&v| {
                let c = if v.abs() <= self.zero_tol {
                    Class::Zero
                } else if v > 0.0 {
                    Class::Plus
                } else {
                    Class::Minus
                };
                c == which
            })
            .count()
    }

    pub fn dim_plus(&self) -> usize {
        self.count(Class::Plus)
    }

    pub fn dim_minus(&self) -> usize {
        self.count(Class::Minus)
    }

    pub fn dim_zero(&self) -> usize {
        self.count(Class::Zero)
    }

    /// Apply `f` to the positive eigenvalues, zero elsewhere.
    pub fn func_plus(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        self.spectral_map(|v| if v > self.zero_tol { f(v) } else { 0.0 })
    }

    /// Apply `f` to the negative eigenvalues, zero elsewhere.
    pub fn func_minus(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        self.spectral_map(|v| if v < -self.zero_tol { f(v) } else { 0.0 })
    }

    fn spectral_map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.dim();
        let mut out = CMatrix::zeros(n, n);
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            let w = f(lambda);
            if w != 0.0 {
                let v = self.eigenvectors.column(k);
                out = &out + &v.outer(&v).scale(cr(w));
            }
        }
        out
    }

    /// `(A^+)^{1/2}` on the positive subspace.
    pub fn sqrt_plus(&self) -> CMatrix {
        self.func_plus(f64::sqrt)
    }

    /// `(-A^-)^{1/2}` on the negative subspace.
    pub fn sqrt_minus(&self) -> CMatrix {
        self.func_minus(|v| (-v).sqrt())
    }

    /// `(A^+)^{-1/2}` on the positive subspace.
    pub fn inv_sqrt_plus(&self) -> CMatrix {
        self.func_plus(|v| 1.0 / v.sqrt())
    }

    /// `(-A^-)^{-1/2}` on the negative subspace.
    pub fn inv_sqrt_minus(&self) -> CMatrix {
        self.func_minus(|v| 1.0 / (-v).sqrt())
    }

    /// `sqrt(|A|)` away from the kernel.
    pub fn sqrt_abs(&self) -> CMatrix {
        self.spectral_map(|v| {
            if v.abs() <= self.zero_tol {
                0.0
            } else {
                v.abs().sqrt()
            }
        })
    }

    /// Orthonormal basis of the positive subspace (columns).
    pub fn basis_plus(&self) -> CMatrix {
        self.basis_of(Class::Plus)
    }

    pub fn basis_minus(&self) -> CMatrix {
        self.basis_of(Class::Minus)
    }

    pub fn basis_zero(&self) -> CMatrix {
        self.basis_of(Class::Zero)
    }

    fn basis_of(&self, which: Class) -> CMatrix {
        let idx: Vec<usize> = self
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &v)| {
                let c = if v.abs() <= self.zero_tol {
                    Class::Zero
                } else if v > 0.0 {
                    Class::Plus
                } else {
                    Class::Minus
                };
                c == which
            })
            .map(|(k, _)| k)
            .collect();
        self.eigenvectors.select_columns(&idx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::CMatrix;
    use crate::spin::{normal_matrix, one_d_rep, tensor_alphas, weyl_rep};

    #[test]
    fn split_of_weyl_alpha3() {
        let w = weyl_rep();
        let s = HermitianSplit::with_default_tol(&w.alphas[2]).unwrap();
        assert!(s.pplus.approx_eq(&CMatrix::real_diagonal(&[0.0, 1.0, 1.0, 0.0]), 1e-13));
        assert!(s.pminus.approx_eq(&CMatrix::real_diagonal(&[1.0, 0.0, 0.0, 1.0]), 1e-13));
        assert!(s.p0.max_abs() < 1e-13);
        assert_eq!((s.dim_plus(), s.dim_minus(), s.dim_zero()), (2, 2, 0));
    }

    #[test]
    fn split_of_two_particle_diagonal_boundary_matrix() {
        let pair = tensor_alphas(&one_d_rep(), 2).unwrap();
        let s2 = 2.0f64.sqrt();
        let an = normal_matrix(&pair, &[-1.0 / s2, 1.0 / s2]).unwrap();
        let s = HermitianSplit::with_default_tol(&an).unwrap();
        assert!(s.pplus.approx_eq(&CMatrix::real_diagonal(&[0.0, 0.0, 1.0, 0.0]), 1e-13));
        assert!(s.pminus.approx_eq(&CMatrix::real_diagonal(&[0.0, 1.0, 0.0, 0.0]), 1e-13));
        assert!(s.p0.approx_eq(&CMatrix::real_diagonal(&[1.0, 0.0, 0.0, 1.0]), 1e-13));
        let expected_inv =
            CMatrix::real_diagonal(&[0.0, -1.0 / s2, 1.0 / s2, 0.0]);
        assert!(s.ainv.approx_eq(&expected_inv, 1e-13));
    }

    #[test]
    fn split_of_zero_matrix_is_all_kernel() {
        let z = CMatrix::zeros(3, 3);
        let s = HermitianSplit::with_default_tol(&z).unwrap();
        assert!(s.p0.approx_eq(&CMatrix::identity(3), 1e-14));
        assert_eq!(s.ainv.max_abs(), 0.0);
    }

    #[test]
    fn projector_and_inverse_identities() {
        let w = weyl_rep();
        let s = HermitianSplit::with_default_tol(&w.alphas[2]).unwrap();
        let sum = &(&s.p0 + &s.pplus) + &s.pminus;
        assert!(sum.approx_eq(&CMatrix::identity(4), 1e-12));
        let id_mod_kernel = &(&s.ainv * &s.a) + &s.p0;
        assert!(id_mod_kernel.approx_eq(&CMatrix::identity(4), 1e-12));
        // projectors idempotent and mutually orthogonal
        for p in [&s.p0, &s.pplus, &s.pminus] {
            assert!((&(p * p) - p).max_abs() < 1e-12);
            assert!(p.is_hermitian(1e-12));
        }
        assert!((&s.pplus * &s.pminus).max_abs() < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian_input() {
        let m = CMatrix::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]);
        assert!(HermitianSplit::with_default_tol(&m).is_err());
    }
}
