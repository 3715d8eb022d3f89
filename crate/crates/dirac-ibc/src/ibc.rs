//! Interior-boundary conditions: linear relations between a boundary value
//! `psi_q` and the wave-function value `psi_*` at an interior point of
//! another sector.
//!
//! The pair lives in the product space `E_q + E_*`. Conservation of
//! probability at the boundary point is the vanishing of a Hermitian form on
//! that space, built from the boundary matrix and the coupling map `N`; the
//! admissible conditions are the complete Lagrangian subspaces of this form.
//! A triangular change of variables block-diagonalizes the form into the
//! spectral data of the boundary matrix plus an effective Hermitian form on
//! `E^0 + E_*`, which reduces everything to the reflecting-boundary theory.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lagrangian::{
    r_matrix_from, subspace_from_unitary, unitarity_defect, Subspace,
};
use crate::matrix::{cr, CMatrix, CVector, I};
use crate::split::HermitianSplit;
use crate::spin::SpinRep;

/// Block order used for the product-space matrices: positive modes, negative
/// modes, kernel modes of the boundary matrix, then the interior space.
pub const BLOCK_ORDER: [&str; 4] = ["plus", "minus", "zero", "star"];

/// Eigenbasis columns of the boundary split arranged in block order
/// (positive, negative, kernel), as an `r x r` unitary.
fn block_basis(split: &HermitianSplit) -> CMatrix {
    split
        .basis_plus()
        .hstack(&split.basis_minus())
        .hstack(&split.basis_zero())
}

/// Eigenvalues in the same arrangement as [`block_basis`].
fn block_eigenvalues(split: &HermitianSplit) -> Vec<f64> {
    let mut out = Vec::with_capacity(split.dim());
    let picks: [&dyn Fn(f64) -> bool; 3] = [
        &|v| v > split.zero_tol,
        &|v| v < -split.zero_tol,
        &|v| v.abs() <= split.zero_tol,
    ];
    for pred in picks {
        out.extend(split.eigenvalues.iter().copied().filter(|&v| pred(v)));
    }
    out
}

/// The conservation form on `E_q + E_*` in block order: the boundary matrix
/// on the diagonal and `(i/hbar) N` couplings off the diagonal.
pub fn a_tilde(split: &HermitianSplit, n: &CMatrix, hbar: f64) -> Result<CMatrix> {
    check_coupling_shape(split, n)?;
    let r = split.dim();
    let rs = n.cols();
    let t = block_basis(split);
    let evals = block_eigenvalues(split);
    let n_blk = &t.adjoint() * n;

    let mut m = CMatrix::zeros(r + rs, r + rs);
    for (j, &lam) in evals.iter().enumerate() {
        m[(j, j)] = cr(lam);
    }
    let coupling = n_blk.scale(I.scale(1.0 / hbar));
    for i in 0..r {
        for j in 0..rs {
            m[(i, r + j)] = coupling[(i, j)];
            m[(r + j, i)] = coupling[(i, j)].conj();
        }
    }
    Ok(m)
}

/// The effective Hermitian form on `E^0 + E_*` whose spectral split governs
/// the general interior-boundary condition.
pub fn a_hat(split: &HermitianSplit, n: &CMatrix, hbar: f64) -> Result<CMatrix> {
    check_coupling_shape(split, n)?;
    let z = split.dim_zero();
    let rs = n.cols();
    let n0 = &split.basis_zero().adjoint() * n; // z x rs
    let core = &(&n.adjoint() * &split.ainv) * n; // rs x rs
    let mut m = CMatrix::zeros(z + rs, z + rs);
    let coupling = n0.scale(I.scale(1.0 / hbar));
    for i in 0..z {
        for j in 0..rs {
            m[(i, z + j)] = coupling[(i, j)];
            m[(z + j, i)] = coupling[(i, j)].conj();
        }
    }
    for i in 0..rs {
        for j in 0..rs {
            m[(z + i, z + j)] = -core[(i, j)] / (hbar * hbar);
        }
    }
    Ok(m)
}

/// Triangular change of variables removing the couplings between the signed
/// modes and the interior space: identity plus `-(i/hbar) (restricted
/// inverse of A) N` in the upper-right block.
pub fn f_tilde(split: &HermitianSplit, n: &CMatrix, hbar: f64) -> Result<CMatrix> {
    check_coupling_shape(split, n)?;
    let r = split.dim();
    let rs = n.cols();
    let t = block_basis(split);
    let evals = block_eigenvalues(split);
    let n_blk = &t.adjoint() * n;

    let mut m = CMatrix::identity(r + rs);
    for (i, &lam) in evals.iter().enumerate() {
        if lam.abs() <= split.zero_tol {
            continue;
        }
        for j in 0..rs {
            m[(i, r + j)] = -I * n_blk[(i, j)] / cr(hbar * lam);
        }
    }
    Ok(m)
}

fn check_coupling_shape(split: &HermitianSplit, n: &CMatrix) -> Result<()> {
    if n.rows() != split.dim() {
        return Err(Error::DimensionMismatch(format!(
            "coupling map has {} rows but the boundary space has dimension {}",
            n.rows(),
            split.dim()
        )));
    }
    Ok(())
}

/// The block-diagonalized data of the conservation form.
#[derive(Clone, Debug)]
pub struct TildeForm {
    /// Conservation form in block order.
    pub atilde: CMatrix,
    /// Effective form on `E^0 + E_*`.
    pub ahat: CMatrix,
    /// Triangular change of variables.
    pub ftilde: CMatrix,
    /// `ftilde^dagger atilde ftilde`; block-diagonal up to roundoff.
    pub aprime: CMatrix,
    /// Spectral split of `ahat`.
    pub hat_split: HermitianSplit,
    /// Spectral split of `aprime` on the full product space.
    pub prime_split: HermitianSplit,
    /// Eigenbasis of the boundary split in block order (ambient `r x r`).
    pub basis: CMatrix,
    pub dim_plus: usize,
    pub dim_minus: usize,
    pub dim_zero: usize,
    pub dim_star: usize,
}

impl TildeForm {
    pub fn new(split: &HermitianSplit, n: &CMatrix, hbar: f64) -> Result<Self> {
        if hbar <= 0.0 {
            return Err(Error::InvalidInput("hbar must be positive".into()));
        }
        let atilde = a_tilde(split, n, hbar)?;
        let ahat = a_hat(split, n, hbar)?;
        let ftilde = f_tilde(split, n, hbar)?;
        let aprime = &(&ftilde.adjoint() * &atilde) * &ftilde;
        let hat_split = HermitianSplit::new(&ahat, split.zero_tol)?;
        let prime_split = HermitianSplit::new(&aprime, split.zero_tol)?;
        Ok(TildeForm {
            atilde,
            ahat,
            ftilde,
            aprime,
            hat_split,
            prime_split,
            basis: block_basis(split),
            dim_plus: split.dim_plus(),
            dim_minus: split.dim_minus(),
            dim_zero: split.dim_zero(),
            dim_star: n.cols(),
        })
    }

    fn dim_total(&self) -> usize {
        self.dim_plus + self.dim_minus + self.dim_zero + self.dim_star
    }

    /// Worst coupling left between the signed-mode block and the
    /// kernel-plus-interior block after the change of variables.
    pub fn off_block_norm(&self) -> f64 {
        let pm = self.dim_plus + self.dim_minus;
        let total = self.dim_total();
        let mut worst = 0.0f64;
        for i in 0..pm {
            for j in pm..total {
                worst = worst.max(self.aprime[(i, j)].norm());
                worst = worst.max(self.aprime[(j, i)].norm());
            }
        }
        worst
    }

    /// The lower-right block of `aprime`, which should reproduce `ahat`.
    pub fn aprime_tail_block(&self) -> CMatrix {
        let pm = self.dim_plus + self.dim_minus;
        let tail = self.dim_zero + self.dim_star;
        self.aprime.submatrix(pm, pm, tail, tail)
    }

    /// Unitary from block coordinates to ambient `E_q + E_*` coordinates.
    pub fn block_to_ambient(&self) -> CMatrix {
        let r = self.basis.rows();
        let rs = self.dim_star;
        let mut u = CMatrix::zeros(r + rs, r + rs);
        for i in 0..r {
            for j in 0..r {
                u[(i, j)] = self.basis[(i, j)];
            }
        }
        for j in 0..rs {
            u[(r + j, r + j)] = crate::matrix::ONE;
        }
        u
    }
}

/// An interior-boundary condition at one boundary point: the boundary split,
/// the coupling map into the boundary fiber, and a unitary mode map on the
/// block-diagonalized form (covering both the simple case, where it reduces
/// to a reflecting-type map, and the general case with kernel/interior
/// modes).
#[derive(Clone, Debug)]
pub struct IbcSpec {
    pub split: HermitianSplit,
    pub n: CMatrix,
    pub hbar: f64,
    /// Mode map on the product space in block coordinates.
    pub ltilde: CMatrix,
    pub tilde: TildeForm,
}

impl IbcSpec {
    /// General construction. `ltilde` is given in block coordinates and must
    /// be unitary from the positive to the negative modes of the
    /// block-diagonalized form.
    pub fn new(split: HermitianSplit, n: CMatrix, hbar: f64, ltilde: CMatrix) -> Result<Self> {
        let tilde = TildeForm::new(&split, &n, hbar)?;
        let total = tilde.dim_total();
        if ltilde.rows() != total || ltilde.cols() != total {
            return Err(Error::DimensionMismatch(format!(
                "mode map is {}x{} but the product space has dimension {}",
                ltilde.rows(),
                ltilde.cols(),
                total
            )));
        }
        let plus = tilde.prime_split.dim_plus();
        let minus = tilde.prime_split.dim_minus();
        if plus != minus {
            return Err(Error::UnbalancedModes { plus, minus });
        }
        let residual = unitarity_defect(&ltilde, &tilde.prime_split);
        if residual > 1e-8 {
            return Err(Error::NotUnitary { residual });
        }
        Ok(IbcSpec {
            split,
            n,
            hbar,
            ltilde,
            tilde,
        })
    }

    /// Build the simple form from an ambient reflecting-type mode map
    /// `l : E^+ -> E^-` on the boundary fiber. This matches the general form
    /// whenever the effective form on `E^0 + E_*` vanishes.
    pub fn simple(split: HermitianSplit, l_ambient: &CMatrix, n: CMatrix, hbar: f64) -> Result<Self> {
        let t = block_basis(&split);
        let l_blk = &(&t.adjoint() * l_ambient) * &t;
        let r = split.dim();
        let rs = n.cols();
        let ltilde = l_blk.embed(r + rs, r + rs, 0, 0);
        Self::new(split, n, hbar, ltilde)
    }

    /// Mode map as an ambient matrix on `E_q + E_*`.
    pub fn ltilde_ambient(&self) -> CMatrix {
        let u = self.tilde.block_to_ambient();
        &(&u * &self.ltilde) * &u.adjoint()
    }

    pub fn n_plus(&self) -> CMatrix {
        &self.split.pplus * &self.n
    }

    pub fn n_minus(&self) -> CMatrix {
        &self.split.pminus * &self.n
    }

    pub fn n_zero(&self) -> CMatrix {
        &self.split.p0 * &self.n
    }
}

/// Wire schema of an interior-boundary condition. The mode map is stored in
/// ambient coordinates on `E_q + E_*` (boundary fiber first), which is
/// independent of eigenbasis choices; `block_order` documents the ordering
/// convention used for the block-diagonalized form in reports.
#[derive(Serialize, Deserialize)]
struct IbcWire {
    #[serde(rename = "An")]
    an: CMatrix,
    #[serde(rename = "N")]
    n: CMatrix,
    hbar: f64,
    #[serde(rename = "Ltilde")]
    ltilde: CMatrix,
    block_order: Vec<String>,
}

impl Serialize for IbcSpec {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        IbcWire {
            an: self.split.a.clone(),
            n: self.n.clone(),
            hbar: self.hbar,
            ltilde: self.ltilde_ambient(),
            block_order: BLOCK_ORDER.iter().map(|s| s.to_string()).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for IbcSpec {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let wire = IbcWire::deserialize(deserializer)?;
        if wire.block_order != BLOCK_ORDER {
            return Err(serde::de::Error::custom(format!(
                "block_order must be {BLOCK_ORDER:?}"
            )));
        }
        ibc_from_ambient(
            &wire.an,
            wire.n,
            wire.hbar,
            &wire.ltilde,
            crate::split::DEFAULT_ZERO_TOL,
        )
        .map_err(serde::de::Error::custom)
    }
}

/// Rebuild an [`IbcSpec`] from ambient wire data (boundary matrix, coupling
/// map, and the mode map on `E_q + E_*` in ambient coordinates).
pub fn ibc_from_ambient(
    an: &CMatrix,
    n: CMatrix,
    hbar: f64,
    ltilde_ambient: &CMatrix,
    zero_tol: f64,
) -> Result<IbcSpec> {
    let split = HermitianSplit::new(an, zero_tol)?;
    let tilde = TildeForm::new(&split, &n, hbar)?;
    let u = tilde.block_to_ambient();
    let ltilde_blk = &(&u.adjoint() * ltilde_ambient) * &u;
    IbcSpec::new(split, n, hbar, ltilde_blk)
}

/// The admissible subspace of the product space `E_q + E_*`, in ambient
/// coordinates: the preimage under the triangular change of variables of the
/// reflecting-type subspace of the block-diagonalized form.
pub fn tilde_subspace(spec: &IbcSpec) -> Result<Subspace> {
    let sprime = subspace_from_unitary(&spec.ltilde, &spec.tilde.prime_split)?;
    let mapped = &spec.tilde.ftilde * &sprime.basis;
    let block = Subspace::from_span(&mapped);
    let u = spec.tilde.block_to_ambient();
    Ok(Subspace::from_span(&(&u * &block.basis)))
}

/// The simple interior-boundary constraint `R psi_q = M psi_*` with
/// `M = -(i/hbar) R A_inv N`, returned as the pair `(R, M)`.
pub fn simple_ibc_constraint(
    split: &HermitianSplit,
    l_ambient: &CMatrix,
    n: &CMatrix,
    hbar: f64,
) -> Result<(CMatrix, CMatrix)> {
    check_coupling_shape(split, n)?;
    let r = r_matrix_from(split, l_ambient);
    let m = (&(&r * &split.ainv) * n).scale(-I / cr(hbar));
    Ok((r, m))
}

/// Pointwise admissibility conditions on the coupling map for the simple
/// constraint: the kernel part of `N` must vanish and `N^dagger A_inv N`
/// must be zero.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimpleConditions {
    pub kernel_part_norm: f64,
    pub kernel_part_ok: bool,
    pub null_form_norm: f64,
    pub null_form_ok: bool,
}

impl SimpleConditions {
    pub fn ok(&self) -> bool {
        self.kernel_part_ok && self.null_form_ok
    }
}

pub const SIMPLE_CONDITION_TOL: f64 = 1e-10;

pub fn check_simple_conditions(split: &HermitianSplit, n: &CMatrix) -> Result<SimpleConditions> {
    check_coupling_shape(split, n)?;
    let scale = n.max_abs().max(1.0);
    let kernel_part_norm = (&split.p0 * n).max_abs();
    let null_form_norm = (&(&n.adjoint() * &split.ainv) * n).max_abs();
    Ok(SimpleConditions {
        kernel_part_norm,
        kernel_part_ok: kernel_part_norm <= SIMPLE_CONDITION_TOL * scale,
        null_form_norm,
        null_form_ok: null_form_norm <= SIMPLE_CONDITION_TOL * scale * scale,
    })
}

/// Pointwise conservation residual at a boundary point:
/// `(2/hbar) Im (psi_* , N^dagger psi_q) + (psi_q , A^n psi_q)`.
/// Zero exactly when probability is locally conserved there.
pub fn local_conservation_residual(
    psi_q: &CVector,
    psi_star: &CVector,
    n: &CMatrix,
    an: &CMatrix,
    hbar: f64,
) -> f64 {
    let exchanged = psi_star.dot(&n.adjoint().mul_vec(psi_q));
    let flux = psi_q.dot(&an.mul_vec(psi_q)).re;
    (2.0 / hbar) * exchanged.im + flux
}

/// Complete a boundary value from its outgoing and kernel parts so that the
/// pair `(psi_q, psi_star)` satisfies the simple interior-boundary
/// constraint: the incoming part is determined by
/// `(-A^-)^{1/2} psi_- = L [(A^+)^{1/2} psi_+ + (i/hbar)(A^+)^{-1/2} N_+ psi_*]
///  + (i/hbar)(-A^-)^{-1/2} N_- psi_*`.
pub fn constrained_boundary_value(
    split: &HermitianSplit,
    l_ambient: &CMatrix,
    n: &CMatrix,
    hbar: f64,
    free_part: &CVector,
    psi_star: &CVector,
) -> CVector {
    let ih = I / cr(hbar);
    let plus_part = split.pplus.mul_vec(free_part);
    let zero_part = split.p0.mul_vec(free_part);
    let n_star = n.mul_vec(psi_star);
    let inner = split
        .sqrt_plus()
        .mul_vec(&plus_part)
        .add(&split.inv_sqrt_plus().mul_vec(&n_star).scale(ih));
    let rhs = l_ambient
        .mul_vec(&inner)
        .add(&split.inv_sqrt_minus().mul_vec(&n_star).scale(ih));
    let minus_part = split.inv_sqrt_minus().mul_vec(&rhs);
    plus_part.add(&zero_part).add(&minus_part)
}

/// Check that the half-space creation condition in its two equivalent
/// shapes selects the same boundary values: request a number of random
/// interior values, solve each form for an admissible boundary value, and
/// cross-check it against the other form; also compare the two homogeneous
/// kernels directly.
pub fn half_space_forms_equivalent(
    rep: &SpinRep,
    normal: &[f64],
    n: &CMatrix,
    hbar: f64,
    samples: usize,
    mut draw: impl FnMut() -> f64,
) -> Result<bool> {
    let gn = rep.gamma_n(normal)?;
    let an = rep.alpha_n(normal)?;
    if n.rows() != rep.r {
        return Err(Error::DimensionMismatch(
            "coupling map does not match the spinor dimension".into(),
        ));
    }
    let id = CMatrix::identity(rep.r);
    let shifted = &gn - &id.scale(I);
    // projector onto the -1 eigenspace of -i gamma^n
    let frak_b = gn.scale(-I);
    let p_minus = (&id - &frak_b).scale(cr(0.5));

    let lhs_a = shifted.clone();
    let rhs_a = (&(&shifted * &an) * n).scale(-I / cr(hbar));
    let lhs_b = p_minus.clone();
    let rhs_b = (&(&p_minus * &an) * n).scale(-I / cr(hbar));

    let residual = |lhs: &CMatrix, rhs: &CMatrix, psi: &CVector, star: &CVector| -> f64 {
        lhs.mul_vec(psi).sub(&rhs.mul_vec(star)).norm()
    };

    // homogeneous parts must agree as subspaces
    let ka = Subspace::from_orthonormal(crate::linalg::nullspace(&lhs_a, 1e-10));
    let kb = Subspace::from_orthonormal(crate::linalg::nullspace(&lhs_b, 1e-10));
    if !ka.approx_eq(&kb, 1e-9) {
        return Ok(false);
    }

    let rstar = n.cols();
    for _ in 0..samples {
        let star = CVector::from_slice(
            &(0..rstar)
                .map(|_| crate::matrix::c(draw(), draw()))
                .collect::<Vec<_>>(),
        );
        // particular solutions of each form
        let (pa, ra) = crate::linalg::lstsq(&lhs_a, &rhs_a.mul_vec(&star), 1e-12);
        let (pb, rb) = crate::linalg::lstsq(&lhs_b, &rhs_b.mul_vec(&star), 1e-12);
        if ra > 1e-9 || rb > 1e-9 {
            return Ok(false);
        }
        let scale = pa.norm().max(pb.norm()).max(1.0);
        if residual(&lhs_b, &rhs_b, &pa, &star) > 1e-9 * scale
            || residual(&lhs_a, &rhs_a, &pb, &star) > 1e-9 * scale
        {
            return Ok(false);
        }
        // a perturbation off the kernel must violate both forms
        let noise = CVector::from_slice(
            &(0..rep.r)
                .map(|_| crate::matrix::c(draw(), draw()))
                .collect::<Vec<_>>(),
        );
        let off = noise.sub(&ka.projector().mul_vec(&noise));
        if off.norm() > 1e-6 {
            let bad = pa.add(&off);
            if residual(&lhs_a, &rhs_a, &bad, &star) < 1e-9
                || residual(&lhs_b, &rhs_b, &bad, &star) < 1e-9
            {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
