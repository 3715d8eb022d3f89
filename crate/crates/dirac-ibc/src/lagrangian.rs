//! Complete Lagrangian subspaces of a Hermitian boundary form and their
//! bijection with unitary maps between the outgoing and incoming mode spaces.
//!
//! For a Hermitian boundary matrix `A` with spectral split
//! `E = E^+ + E^- + E^0`, a subspace `S` is a valid reflecting boundary
//! condition exactly when it equals its own orthogonal companion under the
//! sesquilinear form `(phi, A chi)`. Such subspaces are parametrized by
//! unitaries `L : E^+ -> E^-` via
//! `S = E^0 + { psi : (-A^-)^{1/2} P^- psi = L (A^+)^{1/2} P^+ psi }`,
//! and both directions of this correspondence are implemented here.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{column_space, nullspace, svd, RANK_RTOL};
use crate::matrix::{CMatrix, CVector, I};
use crate::split::{HermitianSplit, HERM_TOL};

/// Default tolerance for subspace comparisons (projector distance).
pub const SUBSPACE_TOL: f64 = 1e-9;

/// A subspace of a finite-dimensional complex space, stored as an
/// orthonormal column basis (zero columns for the trivial subspace).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Subspace {
    pub ambient_dim: usize,
    pub basis: CMatrix,
}

impl Subspace {
    pub fn trivial(ambient_dim: usize) -> Self {
        Subspace {
            ambient_dim,
            basis: CMatrix::zeros(ambient_dim, 0),
        }
    }

    pub fn whole(ambient_dim: usize) -> Self {
        Subspace {
            ambient_dim,
            basis: CMatrix::identity(ambient_dim),
        }
    }

    /// Orthonormalize the columns of `span` (rank-revealing).
    pub fn from_span(span: &CMatrix) -> Self {
        Subspace {
            ambient_dim: span.rows(),
            basis: column_space(span, RANK_RTOL),
        }
    }

    /// Orthonormal basis assumed; used when the caller already has one.
    pub fn from_orthonormal(basis: CMatrix) -> Self {
        Subspace {
            ambient_dim: basis.rows(),
            basis,
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn projector(&self) -> CMatrix {
        if self.dim() == 0 {
            return CMatrix::zeros(self.ambient_dim, self.ambient_dim);
        }
        &self.basis * &self.basis.adjoint()
    }

    /// Frobenius distance between orthogonal projectors; basis independent.
    pub fn distance(&self, other: &Subspace) -> f64 {
        assert_eq!(self.ambient_dim, other.ambient_dim);
        (&self.projector() - &other.projector()).frobenius_norm()
    }

    pub fn approx_eq(&self, other: &Subspace, tol: f64) -> bool {
        self.ambient_dim == other.ambient_dim && self.distance(other) <= tol
    }

    pub fn contains_vec(&self, v: &CVector, tol: f64) -> bool {
        let p = self.projector();
        p.mul_vec(v).sub(v).norm() <= tol * v.norm().max(1.0)
    }

    pub fn contains_subspace(&self, other: &Subspace, tol: f64) -> bool {
        let p = self.projector();
        let diff = &(&p * &other.basis) - &other.basis;
        diff.max_abs() <= tol
    }

    /// Direct sum with an orthogonal complement piece.
    pub fn orthogonal_sum(&self, other: &Subspace) -> Subspace {
        Subspace::from_span(&self.basis.hstack(&other.basis))
    }

    /// A uniformly-spread member of the subspace (for sampling tests).
    pub fn member_from_coeffs(&self, coeffs: &CVector) -> CVector {
        self.basis.mul_vec(coeffs)
    }
}

/// The companion of `S` under the boundary form: all vectors whose pairing
/// `(phi, A chi)` vanishes for every `chi` in `S`.
pub fn sharp(s: &Subspace, a: &CMatrix) -> Result<Subspace> {
    a.check_hermitian(HERM_TOL)?;
    if s.ambient_dim != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "subspace ambient dimension {} vs form dimension {}",
            s.ambient_dim,
            a.rows()
        )));
    }
    if s.dim() == 0 {
        return Ok(Subspace::whole(s.ambient_dim));
    }
    // (phi, A chi) = 0 for all chi in S  <=>  (A B_S)^dagger phi = 0.
    let m = (a * &s.basis).adjoint();
    Ok(Subspace::from_orthonormal(nullspace(&m, RANK_RTOL)))
}

/// A subspace is a complete Lagrangian subspace of the form `A` when it
/// coincides with its companion.
pub fn is_complete_lagrangian(s: &Subspace, a: &CMatrix, tol: f64) -> Result<bool> {
    let sh = sharp(s, a)?;
    Ok(s.approx_eq(&sh, tol))
}

/// A reflecting boundary condition: a unitary map `L` from the outgoing to
/// the incoming mode space of a Hermitian boundary matrix, stored on the
/// ambient space (`L = P^- L P^+`), together with the derived constraint
/// matrix `R` whose kernel is the admissible boundary subspace.
#[derive(Clone, Debug)]
pub struct ReflectingBC {
    pub split: HermitianSplit,
    pub l: CMatrix,
    pub r: CMatrix,
}

/// Wire format of a reflecting boundary condition: the defining data plus
/// the derived constraint matrix and the eigendata of the split. Only the
/// boundary matrix and the mode map are needed to rebuild the condition;
/// a stored constraint matrix is cross-checked when present.
#[derive(Serialize, Deserialize)]
struct ReflectingBCWire {
    an: CMatrix,
    l: CMatrix,
    #[serde(skip_serializing_if = "Option::is_none")]
    r: Option<CMatrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eigenvalues: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eigenvectors: Option<CMatrix>,
}

impl Serialize for ReflectingBC {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        ReflectingBCWire {
            an: self.split.a.clone(),
            l: self.l.clone(),
            r: Some(self.r.clone()),
            eigenvalues: Some(self.split.eigenvalues.clone()),
            eigenvectors: Some(self.split.eigenvectors.clone()),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ReflectingBC {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let wire = ReflectingBCWire::deserialize(deserializer)?;
        let split = HermitianSplit::with_default_tol(&wire.an)
            .map_err(serde::de::Error::custom)?;
        let bc = ReflectingBC::new(split, wire.l).map_err(serde::de::Error::custom)?;
        if let Some(r) = wire.r {
            if !r.approx_eq(&bc.r, 1e-9) {
                return Err(serde::de::Error::custom(
                    "stored constraint matrix disagrees with the mode map",
                ));
            }
        }
        Ok(bc)
    }
}

/// Residual of `L` being unitary from range(P^+) onto range(P^-),
/// measured as the worst defect of `L^dagger L = P^+` and `L L^dagger = P^-`.
pub fn unitarity_defect(l: &CMatrix, split: &HermitianSplit) -> f64 {
    let d1 = (&(&l.adjoint() * l) - &split.pplus).max_abs();
    let d2 = (&(l * &l.adjoint()) - &split.pminus).max_abs();
    // L must also vanish off the mode spaces.
    let d3 = (&(&split.pminus * &(l * &split.pplus)) - l).max_abs();
    d1.max(d2).max(d3)
}

impl ReflectingBC {
    /// Build from a unitary mode map, checking unitarity between the two
    /// mode spaces (which requires them to have equal dimension).
    pub fn new(split: HermitianSplit, l: CMatrix) -> Result<Self> {
        if l.rows() != split.dim() || l.cols() != split.dim() {
            return Err(Error::DimensionMismatch(format!(
                "mode map is {}x{} but the boundary space has dimension {}",
                l.rows(),
                l.cols(),
                split.dim()
            )));
        }
        if split.dim_plus() != split.dim_minus() {
            return Err(Error::UnbalancedModes {
                plus: split.dim_plus(),
                minus: split.dim_minus(),
            });
        }
        let residual = unitarity_defect(&l, &split);
        if residual > 1e-8 {
            return Err(Error::NotUnitary { residual });
        }
        let r = r_matrix_from(&split, &l);
        Ok(ReflectingBC { split, l, r })
    }

    /// The admissible boundary subspace (kernel of `R`).
    pub fn subspace(&self) -> Subspace {
        subspace_from_unitary(&self.l, &self.split)
            .expect("a validated reflecting boundary condition always has a subspace")
    }

    /// Restrict the ambient mode map to explicit bases of the mode spaces,
    /// giving the compact `dim E^+`-square matrix.
    pub fn l_compact(&self) -> CMatrix {
        let bp = self.split.basis_plus();
        let bm = self.split.basis_minus();
        &(&bm.adjoint() * &self.l) * &bp
    }
}

/// The constraint matrix `R = (-A^-)^{1/2} P^- - L (A^+)^{1/2} P^+`;
/// the boundary condition reads `R psi = 0`.
pub fn r_matrix_from(split: &HermitianSplit, l: &CMatrix) -> CMatrix {
    let first = split.sqrt_minus();
    let second = l * &split.sqrt_plus();
    &first - &second
}

/// Equivalent product form `(P^- - L P^+) sqrt(|A|)`.
pub fn r_matrix_product_form(split: &HermitianSplit, l: &CMatrix) -> CMatrix {
    let factor = &split.pminus - &(l * &split.pplus);
    &factor * &split.sqrt_abs()
}

/// The boundary subspace determined by a unitary mode map:
/// the kernel plus all vectors whose flux-normalized incoming part is the
/// `L`-image of their flux-normalized outgoing part.
pub fn subspace_from_unitary(l: &CMatrix, split: &HermitianSplit) -> Result<Subspace> {
    if split.dim_plus() != split.dim_minus() {
        return Err(Error::UnbalancedModes {
            plus: split.dim_plus(),
            minus: split.dim_minus(),
        });
    }
    let residual = unitarity_defect(l, split);
    if residual > 1e-8 {
        return Err(Error::NotUnitary { residual });
    }
    // psi = x + C x for x in E^+, with C = (-A^-)^{-1/2} L (A^+)^{1/2};
    // prepend the kernel.
    let c = &(&split.inv_sqrt_minus() * l) * &split.sqrt_plus();
    let bp = split.basis_plus();
    let graph = &(&bp + &(&c * &bp));
    let span = split.basis_zero().hstack(graph);
    Ok(Subspace::from_span(&span))
}

/// Recover the unitary mode map from a complete Lagrangian subspace
/// (inverse of [`subspace_from_unitary`]).
///
/// The restriction of `P^+` to `S` minus its kernel part must be a bijection
/// onto the positive mode space; a singular restriction means the input was
/// not a complete Lagrangian subspace and is reported as such.
pub fn unitary_from_subspace(s: &Subspace, split: &HermitianSplit) -> Result<CMatrix> {
    let p = split.dim_plus();
    let z = split.dim_zero();
    if split.dim_plus() != split.dim_minus() {
        return Err(Error::UnbalancedModes {
            plus: split.dim_plus(),
            minus: split.dim_minus(),
        });
    }
    if s.ambient_dim != split.dim() {
        return Err(Error::DimensionMismatch(format!(
            "subspace lives in dimension {} but the split in {}",
            s.ambient_dim,
            split.dim()
        )));
    }
    if s.dim() != z + p {
        return Err(Error::NotLagrangian(format!(
            "dimension {} does not match kernel + positive mode count {}",
            s.dim(),
            z + p
        )));
    }
    // The kernel must be contained in S.
    let zero_part = Subspace::from_orthonormal(split.basis_zero());
    if z > 0 && !s.contains_subspace(&zero_part, 1e-8) {
        return Err(Error::NotLagrangian(
            "subspace does not contain the kernel of the boundary matrix".into(),
        ));
    }
    // S' = S with the kernel part projected out.
    let pnz = &split.pplus + &split.pminus;
    let sprime = Subspace::from_span(&(&pnz * &s.basis));
    if sprime.dim() != p {
        return Err(Error::NotLagrangian(format!(
            "mode part of the subspace has dimension {}, expected {}",
            sprime.dim(),
            p
        )));
    }

    let bp = split.basis_plus();
    let bm = split.basis_minus();
    // Coordinates of P^{+-} S' in the mode bases.
    let xp = &bp.adjoint() * &sprime.basis; // p x p
    let xm = &bm.adjoint() * &sprime.basis; // p x p
    let dec = svd(&xp);
    let smin = dec.sigma.last().copied().unwrap_or(0.0);
    let smax = dec.sigma.first().copied().unwrap_or(0.0);
    if smax == 0.0 || smin <= 1e-8 * smax.max(1.0) {
        return Err(Error::NotLagrangian(
            "positive-mode restriction of the subspace is singular".into(),
        ));
    }
    // L = (-A^-)^{1/2} P^-|_{S'} (P^+|_{S'})^{-1} (A^+)^{-1/2}, assembled in
    // the mode bases and then embedded in the ambient space.
    let inv_xp = crate::linalg::solve(&xp, &CMatrix::identity(p))?;
    let lm_comp = &xm * &inv_xp; // E^+ coords -> E^- coords of P^- (P^+|_S')^{-1}
    let amb = &(&bm * &lm_comp) * &bp.adjoint();
    let l = &(&split.sqrt_minus() * &amb) * &split.inv_sqrt_plus();
    Ok(l)
}

/// Convert a plain incoming-from-outgoing matrix `C` (boundary condition
/// `P^- psi = C P^+ psi`) to the flux-normalized mode map
/// `L = (-A^-)^{1/2} C (A^+)^{-1/2}`.
pub fn unitary_from_c(c: &CMatrix, split: &HermitianSplit) -> Result<CMatrix> {
    if c.rows() != split.dim() || c.cols() != split.dim() {
        return Err(Error::DimensionMismatch(format!(
            "C is {}x{}, boundary dimension is {}",
            c.rows(),
            c.cols(),
            split.dim()
        )));
    }
    Ok(&(&split.sqrt_minus() * c) * &split.inv_sqrt_plus())
}

/// Inverse of [`unitary_from_c`]: `C = (-A^-)^{-1/2} L (A^+)^{1/2}`.
pub fn c_from_unitary(l: &CMatrix, split: &HermitianSplit) -> Result<CMatrix> {
    if l.rows() != split.dim() || l.cols() != split.dim() {
        return Err(Error::DimensionMismatch(format!(
            "L is {}x{}, boundary dimension is {}",
            l.rows(),
            l.cols(),
            split.dim()
        )));
    }
    Ok(&(&split.inv_sqrt_minus() * l) * &split.sqrt_plus())
}

/// Flux of a boundary value: the quadratic form `(psi, A psi)`.
pub fn flux(a: &CMatrix, psi: &CVector) -> f64 {
    psi.dot(&a.mul_vec(psi)).re
}

/// The MIT-bag mode map for the chiral representation with the boundary
/// normal along the third axis (used in several tests and the catalog).
pub fn mit_bag_l_weyl() -> CMatrix {
    let mut l = CMatrix::zeros(4, 4);
    l[(0, 2)] = -I;
    l[(3, 1)] = -I;
    l
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{c, ONE, ZERO};
    use crate::spin::weyl_rep;

    fn alpha3_split() -> HermitianSplit {
        HermitianSplit::with_default_tol(&weyl_rep().alphas[2]).unwrap()
    }

    fn mit_bag_subspace() -> Subspace {
        let span = CMatrix::from_rows(&[
            vec![-I, ZERO],
            vec![ZERO, ONE],
            vec![ONE, ZERO],
            vec![ZERO, -I],
        ]);
        Subspace::from_span(&span)
    }

    #[test]
    fn sharp_of_trivial_and_whole() {
        let a = weyl_rep().alphas[2].clone();
        let t = sharp(&Subspace::trivial(4), &a).unwrap();
        assert_eq!(t.dim(), 4);
        let w = sharp(&Subspace::whole(4), &a).unwrap();
        assert_eq!(w.dim(), 0);
    }

    #[test]
    fn mit_bag_subspace_is_self_companion() {
        let a = weyl_rep().alphas[2].clone();
        let s = mit_bag_subspace();
        let sh = sharp(&s, &a).unwrap();
        assert!(s.approx_eq(&sh, 1e-12));
        assert!(is_complete_lagrangian(&s, &a, SUBSPACE_TOL).unwrap());
    }

    #[test]
    fn trivial_subspace_and_positive_modes_are_not_lagrangian() {
        let split = alpha3_split();
        let a = split.a.clone();
        assert!(!is_complete_lagrangian(&Subspace::trivial(4), &a, SUBSPACE_TOL).unwrap());
        let eplus = Subspace::from_orthonormal(split.basis_plus());
        assert!(!is_complete_lagrangian(&eplus, &a, SUBSPACE_TOL).unwrap());
        // on E^+ the form is positive: (psi, A psi) = |psi|^2 here
        let v = eplus.basis.column(0);
        assert!((flux(&a, &v) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mit_bag_mode_map_generates_the_known_subspace() {
        let split = alpha3_split();
        let l = mit_bag_l_weyl();
        let s = subspace_from_unitary(&l, &split).unwrap();
        assert!(s.approx_eq(&mit_bag_subspace(), 1e-12));
        // and the constraint matrix annihilates it
        let bc = ReflectingBC::new(split, l).unwrap();
        assert!((&bc.r * &s.basis).max_abs() < 1e-12);
        let expected_r = CMatrix::from_rows(&[
            vec![ONE, ZERO, I, ZERO],
            vec![ZERO; 4],
            vec![ZERO; 4],
            vec![ZERO, I, ZERO, ONE],
        ]);
        assert!(bc.r.approx_eq(&expected_r, 1e-12));
    }

    #[test]
    fn unitary_from_subspace_recovers_the_mit_bag_map() {
        let split = alpha3_split();
        let s = mit_bag_subspace();
        let l = unitary_from_subspace(&s, &split).unwrap();
        assert!(l.approx_eq(&mit_bag_l_weyl(), 1e-12));
    }

    #[test]
    fn scalar_phase_condition_on_two_modes() {
        let split = HermitianSplit::with_default_tol(&CMatrix::real_diagonal(&[1.0, -1.0]))
            .unwrap();
        let theta = 0.7f64;
        let phase = c(theta.cos(), theta.sin());
        let mut l = CMatrix::zeros(2, 2);
        l[(1, 0)] = phase;
        let s = subspace_from_unitary(&l, &split).unwrap();
        assert_eq!(s.dim(), 1);
        let member = CVector::from_slice(&[ONE, phase]).normalized();
        assert!(s.contains_vec(&member, 1e-12));
        // constraint matrix rows: only the incoming component is constrained
        let r = r_matrix_from(&split, &l);
        let expected = CMatrix::from_rows(&[vec![ZERO, ZERO], vec![-phase, ONE]]);
        assert!(r.approx_eq(&expected, 1e-12));
        // recover the phase
        let back = unitary_from_subspace(&s, &split).unwrap();
        assert!(back.approx_eq(&l, 1e-12));
    }

    #[test]
    fn both_r_matrix_forms_agree() {
        let split = alpha3_split();
        let l = mit_bag_l_weyl();
        let r1 = r_matrix_from(&split, &l);
        let r2 = r_matrix_product_form(&split, &l);
        assert!(r1.approx_eq(&r2, 1e-12));
    }

    #[test]
    fn c_and_l_coincide_when_mode_restrictions_are_identities() {
        let split = alpha3_split();
        let l = mit_bag_l_weyl();
        // A^+ and -A^- are both identities on their ranges here.
        assert!(unitary_from_c(&l, &split).unwrap().approx_eq(&l, 1e-13));
        assert!(c_from_unitary(&l, &split).unwrap().approx_eq(&l, 1e-13));
    }

    #[test]
    fn dirichlet_style_condition_is_rejected_by_the_flux_criterion() {
        // C = 0 forces the incoming part to vanish; an outgoing mode then has
        // strictly positive flux, so this cannot be a reflecting condition.
        let split = alpha3_split();
        let v = split.basis_plus().column(0);
        assert!(flux(&split.a, &v) > 0.5);
        assert!(!is_complete_lagrangian(
            &Subspace::from_orthonormal(split.basis_plus()),
            &split.a,
            SUBSPACE_TOL
        )
        .unwrap());
    }

    #[test]
    fn members_of_generated_subspaces_have_zero_flux() {
        let split = alpha3_split();
        let l = mit_bag_l_weyl();
        let s = subspace_from_unitary(&l, &split).unwrap();
        for k in 0..s.dim() {
            let v = s.basis.column(k);
            assert!(flux(&split.a, &v).abs() < 1e-12);
        }
        let mixed = s
            .member_from_coeffs(&CVector::from_slice(&[c(0.3, -0.4), c(0.5, 0.1)]));
        assert!(flux(&split.a, &mixed).abs() < 1e-12 * mixed.norm_sqr().max(1.0));
    }

    #[test]
    fn unbalanced_mode_spaces_are_refused() {
        let split =
            HermitianSplit::with_default_tol(&CMatrix::real_diagonal(&[1.0, 1.0, -1.0])).unwrap();
        let l = CMatrix::zeros(3, 3);
        assert!(matches!(
            subspace_from_unitary(&l, &split),
            Err(Error::UnbalancedModes { .. })
        ));
    }

    #[test]
    fn rate_matrix_kernel_contains_the_boundary_kernel() {
        let a = CMatrix::real_diagonal(&[0.0, -(2.0f64.sqrt()), 2.0f64.sqrt(), 0.0]);
        let split = HermitianSplit::with_default_tol(&a).unwrap();
        let theta = 1.1f64;
        let mut l = CMatrix::zeros(4, 4);
        l[(1, 2)] = c(theta.cos(), theta.sin());
        let bc = ReflectingBC::new(split, l).unwrap();
        for k in [0usize, 3] {
            let e = CVector::basis(4, k);
            assert!(bc.r.mul_vec(&e).norm() < 1e-13);
        }
        let s = bc.subspace();
        assert_eq!(s.dim(), 3);
    }
}
