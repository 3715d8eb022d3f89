//! Compressed sparse rows over complex entries, and the conjugate-gradient
//! solve used by the implicit time step.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::ZERO;

/// Square CSR matrix.
#[derive(Clone, Debug)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<Complex64>,
}

impl Csr {
    /// Build from (row, col, value) triplets; duplicate positions are summed,
    /// exact zeros dropped.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, Complex64)>) -> Csr {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col = Vec::with_capacity(triplets.len());
        let mut val = Vec::with_capacity(triplets.len());
        let mut iter = triplets.into_iter().peekable();
        while let Some((r, c, mut v)) = iter.next() {
            while let Some(&(r2, c2, v2)) = iter.peek() {
                if r2 == r && c2 == c {
                    v += v2;
                    iter.next();
                } else {
                    break;
                }
            }
            if v.norm() > 0.0 {
                col.push(c);
                val.push(v);
                row_ptr[r + 1] += 1;
            }
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Csr {
            n,
            row_ptr,
            col,
            val,
        }
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    pub fn matvec_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for r in 0..self.n {
            let mut acc = ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.val[k] * x[self.col[k]];
            }
            y[r] = acc;
        }
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![ZERO; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn entry(&self, r: usize, c: usize) -> Complex64 {
        for k in self.row_ptr[r]..self.row_ptr[r + 1] {
            if self.col[k] == c {
                return self.val[k];
            }
        }
        ZERO
    }

    /// Largest entrywise deviation from Hermitian symmetry.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col[k];
                if c >= r {
                    let d = (self.val[k] - self.entry(c, r).conj()).norm();
                    worst = worst.max(d);
                }
            }
        }
        worst
    }

    /// Replace the matrix by its Hermitian part.
    pub fn into_hermitian_part(self) -> Csr {
        let mut triplets = Vec::with_capacity(2 * self.nnz());
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col[k];
                let v = self.val[k];
                triplets.push((r, c, v * 0.5));
                triplets.push((c, r, v.conj() * 0.5));
            }
        }
        Csr::from_triplets(self.n, triplets)
    }
}

pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn axpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Solve `(I + gamma^2 H^2) x = b` for Hermitian `H` by conjugate gradients.
/// The operator is Hermitian positive definite with spectrum inside
/// `[1, 1 + (gamma |H|)^2]`; with `gamma` proportional to the time step the
/// condition number stays O(1), so the iteration count is grid independent.
pub fn cg_shifted_hsq(
    h: &Csr,
    gamma: f64,
    b: &[Complex64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<(Vec<Complex64>, f64, usize)> {
    let n = h.n;
    let g2 = gamma * gamma;
    let mut tmp = vec![ZERO; n];

    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok((vec![ZERO; n], 0.0, 0));
    }
    let mut x = vec![ZERO; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![ZERO; n];
    let mut rs_old = dot(&r, &r).re;

    for it in 0..max_iter {
        let rnorm = rs_old.sqrt();
        if rnorm <= rel_tol * bnorm {
            return Ok((x, rnorm / bnorm, it));
        }
        h.matvec_into(&p, &mut tmp);
        h.matvec_into(&tmp, &mut ap);
        for i in 0..n {
            ap[i] = p[i] + ap[i].scale(g2);
        }
        let alpha = rs_old / dot(&p, &ap).re;
        axpy(Complex64::new(alpha, 0.0), &p, &mut x);
        axpy(Complex64::new(-alpha, 0.0), &ap, &mut r);
        let rs_new = dot(&r, &r).re;
        let beta = rs_new / rs_old;
        for i in 0..n {
            p[i] = r[i] + p[i].scale(beta);
        }
        rs_old = rs_new;
    }
    let rnorm = rs_old.sqrt();
    if rnorm <= rel_tol * bnorm * 10.0 {
        Ok((x, rnorm / bnorm, max_iter))
    } else {
        Err(Error::SingularSystem {
            value: rnorm / bnorm,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{c, cr};

    #[test]
    fn triplets_merge_and_matvec() {
        let m = Csr::from_triplets(
            3,
            vec![
                (0, 0, cr(1.0)),
                (0, 0, cr(1.0)),
                (1, 2, c(0.0, 1.0)),
                (2, 1, c(0.0, -1.0)),
            ],
        );
        assert_eq!(m.nnz(), 3);
        let y = m.matvec(&[cr(1.0), cr(2.0), cr(3.0)]);
        assert_eq!(y[0], cr(2.0));
        assert_eq!(y[1], c(0.0, 3.0));
        assert_eq!(y[2], c(0.0, -2.0));
        assert!(m.hermiticity_defect() < 1e-15);
    }

    #[test]
    fn hermitian_part_symmetrizes() {
        let m = Csr::from_triplets(2, vec![(0, 1, cr(2.0))]);
        let h = m.into_hermitian_part();
        assert_eq!(h.entry(0, 1), cr(1.0));
        assert_eq!(h.entry(1, 0), cr(1.0));
        assert!(h.hermiticity_defect() < 1e-15);
    }

    #[test]
    fn cg_solves_the_shifted_square() {
        let h = Csr::from_triplets(
            2,
            vec![
                (0, 0, cr(2.0)),
                (0, 1, c(0.0, 1.0)),
                (1, 0, c(0.0, -1.0)),
                (1, 1, cr(-1.0)),
            ],
        );
        let gamma = 0.3;
        let xtrue = vec![c(1.0, -2.0), c(0.5, 0.5)];
        let hx = h.matvec(&xtrue);
        let hhx = h.matvec(&hx);
        let b: Vec<_> = xtrue
            .iter()
            .zip(&hhx)
            .map(|(x, y)| x + y.scale(gamma * gamma))
            .collect();
        let (x, res, iters) = cg_shifted_hsq(&h, gamma, &b, 1e-14, 100).unwrap();
        assert!(res < 1e-13);
        assert!(iters <= 10);
        for (a, b) in x.iter().zip(&xtrue) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
