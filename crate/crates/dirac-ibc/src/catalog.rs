//! A catalog of named reflecting boundary conditions, the self-adjoint
//! 2x2-matrix parametrization of the chiral half-space family and its
//! conversion to and from the unitary mode map, and plane-wave reflection
//! off a flat wall.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lagrangian::{unitary_from_subspace, ReflectingBC, Subspace};
use crate::linalg::{lstsq, nullspace, svd, RANK_RTOL};
use crate::matrix::{c, cr, CMatrix, CVector, I, ONE};
use crate::spin::{normal_matrix, one_d_rep, tensor_alphas, SpinRep};
use crate::split::HermitianSplit;

fn phase(t: f64) -> Complex64 {
    c(t.cos(), t.sin())
}

/// The bag-model boundary condition for a 3D representation: the boundary
/// subspace is the `+i` eigenspace of `n . gamma`, i.e. the kernel of
/// `n . gamma - i`.
pub fn mit_bag(rep: &SpinRep, n: &[f64]) -> Result<ReflectingBC> {
    let gn = rep.gamma_n(n)?;
    let an = rep.alpha_n(n)?;
    let split = HermitianSplit::with_default_tol(&an)?;
    let shifted = &gn - &CMatrix::identity(rep.r).scale(I);
    let s = Subspace::from_orthonormal(nullspace(&shifted, RANK_RTOL));
    let l = unitary_from_subspace(&s, &split)?;
    ReflectingBC::new(split, l)
}

/// Local phase boundary conditions for the 1D two-spinor on an interval:
/// at the left end the component moving out of the wall picks up `e^{i
/// theta}` relative to the component moving in, and correspondingly with
/// `phi` at the right end. Mode spaces are taken with respect to the inward
/// normal, which flips the sign of the boundary matrix at the right end.
pub fn interval_conditions(theta: f64, phi: f64) -> (ReflectingBC, ReflectingBC) {
    let alpha1 = one_d_rep().alphas[0].clone();

    // Left end, inward normal +x : boundary matrix +alpha^1.
    let split_l = HermitianSplit::with_default_tol(&alpha1).expect("diagonal matrix");
    let mut l_left = CMatrix::zeros(2, 2);
    l_left[(1, 0)] = phase(theta);
    let left = ReflectingBC::new(split_l, l_left).expect("phase map is unitary");

    // Right end, inward normal -x : boundary matrix -alpha^1.
    let split_r =
        HermitianSplit::with_default_tol(&alpha1.scale(-ONE)).expect("diagonal matrix");
    let mut l_right = CMatrix::zeros(2, 2);
    l_right[(0, 1)] = phase(-phi);
    let right = ReflectingBC::new(split_r, l_right).expect("phase map is unitary");

    (left, right)
}

/// The self-adjoint 2x2 matrix parametrizing the wall family of
/// Al-Hashimi and Wiese.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AhwT {
    pub a: f64,
    #[serde(with = "complex_pair")]
    pub b: Complex64,
    pub c: f64,
}

mod complex_pair {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(Complex64::new(re, im))
    }
}

impl AhwT {
    pub fn matrix(&self) -> CMatrix {
        CMatrix::from_rows(&[vec![cr(self.a), self.b], vec![self.b.conj(), cr(self.c)]])
    }
}

/// Result of converting a unitary mode map back to the self-adjoint
/// parametrization: some unitary maps lie outside the family, signalled by a
/// vanishing conversion denominator.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum AhwConversion {
    T(AhwT),
    /// No self-adjoint parameter exists; carries `|denominator|`.
    NoT { denominator_abs: f64 },
}

fn weyl_alpha3_split() -> HermitianSplit {
    HermitianSplit::with_default_tol(&CMatrix::real_diagonal(&[-1.0, 1.0, 1.0, -1.0]))
        .expect("diagonal matrix")
}

/// Mode map of the wall condition with parameter matrix `T`, in the chiral
/// representation with the boundary normal along the third axis. The
/// normalizing denominator `(1 + ia)(1 + ic) + |b|^2` never vanishes, so the
/// construction is total, and the result is always unitary between the mode
/// spaces.
pub fn ahw_from_t(t: &AhwT) -> ReflectingBC {
    let (a, b, cc) = (t.a, t.b, t.c);
    let ia = c(1.0, a);
    let ic = c(1.0, cc);
    let denom = ia * ic + cr(b.norm_sqr());
    let l11 = cr(-2.0) * I * b / denom;
    let l12 = (ia.conj() * ic - cr(b.norm_sqr())) / denom;
    let l21 = (ia * ic.conj() - cr(b.norm_sqr())) / denom;
    let l22 = cr(-2.0) * I * b.conj() / denom;

    // Compact rows map (psi_2, psi_3) -> (psi_1, psi_4) in 1-based labels.
    let mut l = CMatrix::zeros(4, 4);
    l[(0, 1)] = l11;
    l[(0, 2)] = l12;
    l[(3, 1)] = l21;
    l[(3, 2)] = l22;
    ReflectingBC::new(weyl_alpha3_split(), l)
        .expect("the wall family always yields a unitary mode map")
}

/// Normalizing denominator of the forward construction.
pub fn ahw_denominator(t: &AhwT) -> Complex64 {
    c(1.0, t.a) * c(1.0, t.c) + cr(t.b.norm_sqr())
}

const PHASE_CORNER_TOL: f64 = 1e-12;
/// Threshold on the conversion denominator below which no parameter matrix
/// exists.
pub const NO_T_TOL: f64 = 1e-9;

/// Convert a wall condition back to the self-adjoint parameter matrix, or
/// report that the condition lies outside the family.
///
/// The mode map is decomposed as a generic 2x2 unitary
/// `[[cos z e^{i eta}, sin z e^{i kappa}], [sin z e^{i tau}, -cos z e^{i
/// (kappa + tau - eta)}]]`; at the corners `z = 0, pi/2` the redundant phases
/// are fixed to zero.
pub fn ahw_to_t(bc: &ReflectingBC) -> Result<AhwConversion> {
    let expected = CMatrix::real_diagonal(&[-1.0, 1.0, 1.0, -1.0]);
    if !bc.split.a.approx_eq(&expected, 1e-9) {
        return Err(Error::InvalidInput(
            "conversion to the wall parameter matrix requires the chiral representation \
             with the boundary normal along the third axis"
                .into(),
        ));
    }
    let l11 = bc.l[(0, 1)];
    let l12 = bc.l[(0, 2)];
    let l21 = bc.l[(3, 1)];
    let l22 = bc.l[(3, 2)];

    let cos_z = l11.norm().min(1.0);
    let sin_z = l21.norm().min(1.0);
    let eta = if cos_z > PHASE_CORNER_TOL { l11.arg() } else { 0.0 };
    let (kappa, tau) = if sin_z > PHASE_CORNER_TOL {
        (l12.arg(), l21.arg())
    } else {
        // Diagonal corner: only kappa + tau enters; pin kappa = 0.
        (0.0, (-l22).arg() + eta)
    };

    let e_kappa = phase(kappa);
    let e_tau = phase(tau);
    let denom = cr(1.0) + cr(sin_z) * (e_tau + e_kappa) + e_kappa * e_tau;
    if denom.norm() <= NO_T_TOL {
        return Ok(AhwConversion::NoT {
            denominator_abs: denom.norm(),
        });
    }
    let pref = -I / denom;
    let t11 = pref * (cr(1.0) + cr(sin_z) * (e_tau - e_kappa) - e_kappa * e_tau);
    let t12 = pref * cr(-2.0 * cos_z) * phase(eta);
    let t22 = pref * (cr(1.0) - cr(sin_z) * (e_tau - e_kappa) - e_kappa * e_tau);
    Ok(AhwConversion::T(AhwT {
        a: t11.re,
        b: t12,
        c: t22.re,
    }))
}

/// The three one-parameter families of wall conditions that fall outside the
/// self-adjoint parametrization, as compact mode maps embedded on the chiral
/// mode spaces.
pub fn ahw_outside_family(kappa: f64) -> [ReflectingBC; 3] {
    let split = weyl_alpha3_split();
    let build = |entries: [(usize, usize, Complex64); 2]| -> ReflectingBC {
        let mut l = CMatrix::zeros(4, 4);
        for (i, j, v) in entries {
            l[(i, j)] = v;
        }
        ReflectingBC::new(split.clone(), l).expect("unitary by construction")
    };
    [
        build([(0, 2, phase(kappa)), (3, 1, -ONE)]),
        build([(0, 2, -ONE), (3, 1, phase(kappa))]),
        build([(0, 1, phase(kappa)), (3, 2, phase(-kappa))]),
    ]
}

/// Phase boundary condition for the 2D two-spinor wall, written over the
/// diagonal boundary matrix diag(1, -1).
pub fn benguria(eta: f64) -> ReflectingBC {
    let split = HermitianSplit::with_default_tol(&CMatrix::real_diagonal(&[1.0, -1.0]))
        .expect("diagonal matrix");
    let mut l = CMatrix::zeros(2, 2);
    l[(1, 0)] = phase(eta);
    ReflectingBC::new(split, l).expect("phase map is unitary")
}

/// Point-interaction boundary condition for two massless 1D particles on the
/// diagonal of their ordered configuration space: the boundary matrix is
/// diag(0, -sqrt 2, sqrt 2, 0) and the mode map is a single phase relating
/// the two mixed-chirality components.
pub fn lienert_two_particle(theta: f64) -> ReflectingBC {
    let pair = tensor_alphas(&one_d_rep(), 2).expect("two particles");
    let s = 1.0 / 2.0f64.sqrt();
    let an = normal_matrix(&pair, &[-s, s]).expect("unit normal");
    let split = HermitianSplit::with_default_tol(&an).expect("diagonal matrix");
    let mut l = CMatrix::zeros(4, 4);
    l[(1, 2)] = phase(theta);
    ReflectingBC::new(split, l).expect("phase map is unitary")
}

/// A plane-wave reflection problem off the wall `x_3 = 0` of the upper half
/// space: an incoming wave with wavevector `k' = (k1, k2, -k3)` and a
/// reflected wave with wavevector `k`, both positive-energy eigenwaves.
#[derive(Clone, Debug)]
pub struct PlaneWaveProblem {
    pub rep: SpinRep,
    /// Reflected wavevector; its third component must be positive.
    pub k: [f64; 3],
    pub m: f64,
    pub hbar: f64,
    pub bc: ReflectingBC,
}

impl PlaneWaveProblem {
    pub fn new(rep: SpinRep, k: [f64; 3], m: f64, hbar: f64, bc: ReflectingBC) -> Result<Self> {
        if k[2] <= 0.0 {
            return Err(Error::InvalidInput(
                "the reflected wavevector must have positive third component".into(),
            ));
        }
        if m < 0.0 {
            return Err(Error::InvalidInput("mass must be nonnegative".into()));
        }
        let ksq: f64 = k.iter().map(|x| x * x).sum();
        if m == 0.0 && ksq == 0.0 {
            return Err(Error::InvalidInput(
                "massless zero-momentum waves are degenerate".into(),
            ));
        }
        Ok(PlaneWaveProblem { rep, k, m, hbar, bc })
    }

    pub fn incoming_wavevector(&self) -> [f64; 3] {
        [self.k[0], self.k[1], -self.k[2]]
    }

    pub fn energy(&self) -> f64 {
        let ksq: f64 = self.k.iter().map(|x| x * x).sum();
        (self.m * self.m + self.hbar * self.hbar * ksq).sqrt()
    }

    fn momentum_matrix(&self, k: &[f64; 3]) -> CMatrix {
        let mut h = self.rep.beta.scale(cr(self.m));
        for (alpha, &kk) in self.rep.alphas.iter().zip(k) {
            h = &h + &alpha.scale(cr(self.hbar * kk));
        }
        h
    }

    /// Orthonormal basis of the positive-energy eigenspace at wavevector `k`.
    pub fn positive_energy_basis(&self, k: &[f64; 3]) -> Result<CMatrix> {
        let h = self.momentum_matrix(k);
        let e = self.energy();
        let split = HermitianSplit::new(&h, 1e-8 * e.max(1.0))?;
        let idx: Vec<usize> = split
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &v)| (v - e).abs() <= 1e-8 * e.max(1.0))
            .map(|(i, _)| i)
            .collect();
        if idx.is_empty() {
            return Err(Error::InvalidInput(
                "no eigenvalue matches the positive energy".into(),
            ));
        }
        Ok(split.eigenvectors.select_columns(&idx))
    }

    /// Solve for the reflected amplitude: the unique positive-energy `v` at
    /// the reflected wavevector such that `u + v` satisfies the boundary
    /// condition.
    pub fn reflect(&self, u: &CVector) -> Result<CVector> {
        let kin = self.incoming_wavevector();
        let basis_in = self.positive_energy_basis(&kin)?;
        // membership check: u must be a positive-energy eigenwave
        let proj = &basis_in * &basis_in.adjoint();
        let residual = proj.mul_vec(u).sub(u).norm();
        if residual > 1e-8 * u.norm().max(1.0) {
            return Err(Error::NotInEigenspace { residual });
        }
        if u.norm() == 0.0 {
            return Ok(CVector::zeros(u.dim()));
        }

        let basis_out = self.positive_energy_basis(&self.k)?;
        let system = &self.bc.r * &basis_out;
        let rhs = self.bc.r.mul_vec(u).scale(cr(-1.0));
        let dec = svd(&system);
        let smax = dec.sigma.first().copied().unwrap_or(0.0);
        let smin = dec.sigma.last().copied().unwrap_or(0.0);
        if smax == 0.0 || smin <= 1e-8 * smax {
            return Err(Error::SingularSystem { value: smin });
        }
        let (coeffs, res) = lstsq(&system, &rhs, RANK_RTOL);
        if res > 1e-8 * rhs.norm().max(1.0) {
            return Err(Error::SingularSystem { value: res });
        }
        Ok(basis_out.mul_vec(&coeffs))
    }

    /// The reflection map expressed in the two positive-energy bases:
    /// column `j` holds the coefficients of the reflected wave for the
    /// `j`-th incoming basis vector.
    pub fn reflection_matrix(&self) -> Result<(CMatrix, CMatrix, CMatrix)> {
        let kin = self.incoming_wavevector();
        let basis_in = self.positive_energy_basis(&kin)?;
        let basis_out = self.positive_energy_basis(&self.k)?;
        let mut coeffs = CMatrix::zeros(basis_out.cols(), basis_in.cols());
        for j in 0..basis_in.cols() {
            let v = self.reflect(&basis_in.column(j))?;
            let cj = basis_out.adjoint().mul_vec(&v);
            coeffs.set_column(j, &cj);
        }
        Ok((basis_in, basis_out, coeffs))
    }
}

/// Free-function form of [`PlaneWaveProblem::reflect`].
pub fn reflect_plane_wave(p: &PlaneWaveProblem, u: &CVector) -> Result<CVector> {
    p.reflect(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagrangian::{flux, is_complete_lagrangian, mit_bag_l_weyl, SUBSPACE_TOL};
    use crate::matrix::ZERO;
    use crate::spin::weyl_rep;

    #[test]
    fn mit_bag_matches_the_known_chiral_form() {
        let bc = mit_bag(&weyl_rep(), &[0.0, 0.0, 1.0]).unwrap();
        assert!(bc.l.approx_eq(&mit_bag_l_weyl(), 1e-12));
        let s = bc.subspace();
        let expected = Subspace::from_span(&CMatrix::from_rows(&[
            vec![-I, ZERO],
            vec![ZERO, ONE],
            vec![ONE, ZERO],
            vec![ZERO, -I],
        ]));
        assert!(s.approx_eq(&expected, 1e-12));
        // every member is annihilated by (n.gamma - i)
        let g3 = weyl_rep().gammas[2].clone();
        let shifted = &g3 - &CMatrix::identity(4).scale(I);
        assert!((&shifted * &s.basis).max_abs() < 1e-12);
    }

    #[test]
    fn mit_bag_for_opposite_normals_gives_orthogonal_subspaces() {
        let rep = weyl_rep();
        let up = mit_bag(&rep, &[0.0, 0.0, 1.0]).unwrap().subspace();
        let down = mit_bag(&rep, &[0.0, 0.0, -1.0]).unwrap().subspace();
        // +i eigenspace of -gamma^3 is the -i eigenspace of gamma^3
        let overlap = &up.basis.adjoint() * &down.basis;
        assert!(overlap.max_abs() < 1e-12);
        assert_eq!(up.dim() + down.dim(), 4);
    }

    #[test]
    fn interval_conditions_produce_the_expected_constraints() {
        let theta = 0.9;
        let phi = -0.3;
        let (left, right) = interval_conditions(theta, phi);
        let expected_left = CMatrix::from_rows(&[
            vec![ZERO, ZERO],
            vec![-phase(theta), ONE],
        ]);
        assert!(left.r.approx_eq(&expected_left, 1e-12));
        // theta = 0 admits the symmetric combination
        let (l0, _) = interval_conditions(0.0, 0.0);
        assert!(l0
            .subspace()
            .contains_vec(&CVector::from_real(&[1.0, 1.0]).normalized(), 1e-12));
        // right wall: psi_plus = e^{i phi} psi_minus, i.e. comp1 = e^{i phi} comp0
        let member = CVector::from_slice(&[ONE, phase(phi)]).normalized();
        assert!(right.subspace().contains_vec(&member, 1e-12));
        for bc in [&left, &right] {
            assert!(is_complete_lagrangian(&bc.subspace(), &bc.split.a, SUBSPACE_TOL).unwrap());
        }
    }

    #[test]
    fn ahw_zero_parameters_swap_the_modes() {
        let bc = ahw_from_t(&AhwT {
            a: 0.0,
            b: ZERO,
            c: 0.0,
        });
        assert_eq!(bc.l[(0, 1)], ZERO);
        assert!((bc.l[(0, 2)] - ONE).norm() < 1e-15);
        assert!((bc.l[(3, 1)] - ONE).norm() < 1e-15);
        assert_eq!(bc.l[(3, 2)], ZERO);
    }

    #[test]
    fn ahw_members_have_zero_normal_flux() {
        let t = AhwT {
            a: 0.7,
            b: c(-0.2, 1.1),
            c: -0.4,
        };
        let bc = ahw_from_t(&t);
        let s = bc.subspace();
        let a3 = bc.split.a.clone();
        let member = s.member_from_coeffs(&CVector::from_slice(&[c(0.3, 0.4), c(-0.8, 0.2)]));
        assert!(flux(&a3, &member).abs() < 1e-12 * member.norm_sqr());
    }

    #[test]
    fn ahw_roundtrip_through_the_parameter_matrix() {
        let t = AhwT {
            a: -1.3,
            b: c(0.4, -0.9),
            c: 2.2,
        };
        let bc = ahw_from_t(&t);
        match ahw_to_t(&bc).unwrap() {
            AhwConversion::T(back) => {
                assert!((back.a - t.a).abs() < 1e-10);
                assert!((back.b - t.b).norm() < 1e-10);
                assert!((back.c - t.c).abs() < 1e-10);
            }
            AhwConversion::NoT { .. } => panic!("roundtrip lost the parameter matrix"),
        }
    }

    #[test]
    fn outside_family_maps_have_no_parameter_matrix() {
        for kappa in [0.0, 0.7, 2.9, -1.4] {
            for bc in ahw_outside_family(kappa) {
                assert!(is_complete_lagrangian(&bc.subspace(), &bc.split.a, SUBSPACE_TOL)
                    .unwrap());
                match ahw_to_t(&bc).unwrap() {
                    AhwConversion::NoT { denominator_abs } => {
                        assert!(denominator_abs <= 1e-12);
                    }
                    AhwConversion::T(_) => panic!("expected no parameter matrix"),
                }
            }
        }
    }

    #[test]
    fn benguria_subspace_is_the_phase_line() {
        let eta = 1.7;
        let bc = benguria(eta);
        let member = CVector::from_slice(&[ONE, phase(eta)]).normalized();
        assert!(bc.subspace().contains_vec(&member, 1e-12));
        assert!(is_complete_lagrangian(&bc.subspace(), &bc.split.a, SUBSPACE_TOL).unwrap());
    }

    #[test]
    fn two_particle_phase_condition() {
        let theta = 0.45;
        let bc = lienert_two_particle(theta);
        let q = 2.0f64.powf(0.25);
        let mut expected_r = CMatrix::zeros(4, 4);
        expected_r[(1, 1)] = cr(q);
        expected_r[(1, 2)] = -cr(q) * phase(theta);
        assert!(bc.r.approx_eq(&expected_r, 1e-12));
        let s = bc.subspace();
        assert_eq!(s.dim(), 3);
        let sym = CVector::from_slice(&[ZERO, ONE, ONE, ZERO]).normalized();
        let bc0 = lienert_two_particle(0.0);
        assert!(bc0.subspace().contains_vec(&sym, 1e-12));
    }

    #[test]
    fn plane_wave_reflection_massless_head_on() {
        let rep = weyl_rep();
        let bc = mit_bag(&rep, &[0.0, 0.0, 1.0]).unwrap();
        let p = PlaneWaveProblem::new(rep, [0.0, 0.0, 1.0], 0.0, 1.0, bc).unwrap();
        let basis = p.positive_energy_basis(&p.incoming_wavevector()).unwrap();
        assert_eq!(basis.cols(), 2);
        let u = basis.column(0);
        let v = p.reflect(&u).unwrap();
        assert!((v.norm() - u.norm()).abs() < 1e-11);
        let total = u.add(&v);
        let a3 = p.bc.split.a.clone();
        assert!(flux(&a3, &total).abs() < 1e-11);
    }

    #[test]
    fn plane_wave_reflection_massive_flux_split() {
        let rep = weyl_rep();
        let bc = mit_bag(&rep, &[0.0, 0.0, 1.0]).unwrap();
        let p = PlaneWaveProblem::new(rep, [0.0, 0.0, 1.0], 1.0, 1.0, bc).unwrap();
        let basis = p.positive_energy_basis(&p.incoming_wavevector()).unwrap();
        let u = basis
            .mul_vec(&CVector::from_slice(&[c(0.6, 0.1), c(-0.2, 0.77)]))
            .normalized();
        let v = p.reflect(&u).unwrap();
        let a3 = p.bc.split.a.clone();
        // separately, each wave carries opposite normal flux
        assert!((flux(&a3, &u) + flux(&a3, &v)).abs() < 1e-12);
        // and the cross terms vanish for exact eigenwaves
        let cross = u.dot(&a3.mul_vec(&v));
        assert!(cross.norm() < 1e-11);
    }

    #[test]
    fn plane_wave_zero_input_reflects_to_zero() {
        let rep = weyl_rep();
        let bc = mit_bag(&rep, &[0.0, 0.0, 1.0]).unwrap();
        let p = PlaneWaveProblem::new(rep, [0.3, -0.2, 0.9], 0.5, 1.0, bc).unwrap();
        let v = p.reflect(&CVector::zeros(4)).unwrap();
        assert_eq!(v.norm(), 0.0);
    }

    #[test]
    fn plane_wave_rejects_bad_inputs() {
        let rep = weyl_rep();
        let bc = mit_bag(&rep, &[0.0, 0.0, 1.0]).unwrap();
        assert!(PlaneWaveProblem::new(rep.clone(), [0.0, 0.0, -1.0], 1.0, 1.0, bc.clone())
            .is_err());
        assert!(PlaneWaveProblem::new(rep.clone(), [0.0, 0.0, 0.0], 0.0, 1.0, bc.clone())
            .is_err());
        let p = PlaneWaveProblem::new(rep, [0.0, 0.0, 1.0], 0.0, 1.0, bc).unwrap();
        // a vector outside the incoming eigenspace is refused
        // (for k' = -e3 the incoming positive-energy space is span{e0, e3})
        let bad = CVector::basis(4, 1);
        let outcome = p.reflect(&bad);
        assert!(matches!(
            outcome,
            Err(Error::NotInEigenspace { .. }) | Ok(_)
        ));
        if let Ok(_) = outcome {
            panic!("membership check should have rejected this vector");
        }
    }
}
