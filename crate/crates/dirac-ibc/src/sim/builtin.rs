//! Bundled desk-scale models: a reflecting interval, a point-source creation
//! model on an interval, and the two-particle wedge-plus-line creation
//! model. Also small helpers for initial states.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ibc::check_simple_conditions;
use crate::matrix::{c, cr, CMatrix, CVector, ONE};
use crate::sim::model::{
    CouplingMap, CouplingSpec, Face, Geometry, ModelSpec, SectorSpec, State, WallSpec,
};
use crate::spin::{one_d_rep, tensor_alphas};
use crate::split::HermitianSplit;

fn phase(t: f64) -> Complex64 {
    c(t.cos(), t.sin())
}

fn line_sector(name: &str, x_max: f64, dx: f64, mass: f64) -> SectorSpec {
    let rep = one_d_rep();
    SectorSpec {
        name: name.into(),
        geometry: Geometry::Interval { x_max },
        dx,
        spinor_dim: 2,
        a_mats: vec![rep.alphas[0].clone()],
        b: rep.beta.scale(cr(mass)),
    }
}

/// Phase map at the left interval end: the component moving into the domain
/// is `e^{i theta}` times the arriving one.
fn left_phase_wall(theta: f64) -> CMatrix {
    let mut l = CMatrix::zeros(2, 2);
    l[(1, 0)] = phase(theta);
    l
}

/// Phase map at the right interval end (mode spaces with respect to the
/// inward normal, which flips the boundary matrix sign).
fn right_phase_wall(phi: f64) -> CMatrix {
    let mut l = CMatrix::zeros(2, 2);
    l[(0, 1)] = phase(-phi);
    l
}

/// Bag-type right wall: the admissible subspace is spanned by `(1, i)`.
fn right_bag_wall() -> CMatrix {
    let mut l = CMatrix::zeros(2, 2);
    l[(0, 1)] = -crate::matrix::I;
    l
}

/// A single interval with phase walls at both ends.
pub fn builtin_interval(
    x_max: f64,
    dx: f64,
    theta: f64,
    phi: f64,
    mass: f64,
    hbar: f64,
) -> Result<ModelSpec> {
    let model = ModelSpec {
        sectors: vec![line_sector("line", x_max, dx, mass)],
        couplings: vec![],
        walls: vec![
            WallSpec {
                sector: 0,
                face: Face::IntervalLeft,
                l: left_phase_wall(theta),
            },
            WallSpec {
                sector: 0,
                face: Face::IntervalRight,
                l: right_phase_wall(phi),
            },
        ],
        hbar,
    };
    model.validate()?;
    Ok(model)
}

#[derive(Clone)]
pub struct PointSourceParams {
    pub x_max: f64,
    pub dx: f64,
    /// Phase of the reflecting part of the boundary condition at the source.
    pub theta: f64,
    /// Coupling map into the boundary fiber (2 x 1).
    pub n: CMatrix,
    pub mass: f64,
    pub hbar: f64,
    /// Assemble even when the pointwise admissibility conditions fail.
    pub override_conditions: bool,
}

/// Sector 0 is a single amplitude (the empty configuration), sector 1 a
/// two-spinor on `[0, x_max]`. Probability crossing the left end of the
/// interval feeds the amplitude and back; the right end is a bag-type wall.
pub fn builtin_point_source(p: &PointSourceParams) -> Result<ModelSpec> {
    if p.n.rows() != 2 || p.n.cols() != 1 {
        return Err(Error::InvalidInput(
            "point-source coupling map must be 2 x 1".into(),
        ));
    }
    let line = line_sector("one-particle", p.x_max, p.dx, p.mass);
    let split = HermitianSplit::with_default_tol(&line.a_mats[0])?;
    let report = check_simple_conditions(&split, &p.n)?;
    if !report.ok() && !p.override_conditions {
        return Err(Error::InvalidModel(format!(
            "coupling map violates the pointwise admissibility conditions \
             (kernel part {:.2e}, null form {:.2e}); set the override to proceed",
            report.kernel_part_norm, report.null_form_norm
        )));
    }
    let point = SectorSpec {
        name: "vacuum".into(),
        geometry: Geometry::Point,
        dx: 1.0,
        spinor_dim: 1,
        a_mats: vec![],
        b: CMatrix::zeros(1, 1),
    };
    let model = ModelSpec {
        sectors: vec![point, line],
        couplings: vec![CouplingSpec {
            source_sector: 1,
            face: Face::IntervalLeft,
            target_sector: 0,
            map: CouplingMap::ToPoint,
            nu_weight: 1.0,
            l: left_phase_wall(p.theta),
            n: p.n.clone(),
        }],
        walls: vec![WallSpec {
            sector: 1,
            face: Face::IntervalRight,
            l: right_bag_wall(),
        }],
        hbar: p.hbar,
    };
    model.validate()?;
    Ok(model)
}

#[derive(Clone)]
pub struct LienertNickelParams {
    pub x_max: f64,
    /// Wedge grid spacing; the line sector uses half of it.
    pub dx: f64,
    pub theta: f64,
    /// Coupling map from the line fiber into the two-particle fiber (4 x 2).
    pub n: CMatrix,
    pub hbar: f64,
    pub override_conditions: bool,
}

/// Two-sector creation model: sector 0 a two-spinor line, sector 1 a
/// four-spinor wedge whose diagonal exchanges probability with the line at
/// the meeting point `(z, z) -> z`; outer walls reflect.
pub fn builtin_lienert_nickel(p: &LienertNickelParams) -> Result<ModelSpec> {
    if p.n.rows() != 4 || p.n.cols() != 2 {
        return Err(Error::InvalidInput(
            "two-particle coupling map must be 4 x 2".into(),
        ));
    }
    let pair = tensor_alphas(&one_d_rep(), 2)?;
    let wedge = SectorSpec {
        name: "two-particle".into(),
        geometry: Geometry::Wedge { x_max: p.x_max },
        dx: p.dx,
        spinor_dim: 4,
        a_mats: pair,
        b: CMatrix::zeros(4, 4),
    };
    let line = line_sector("one-particle", p.x_max, p.dx / 2.0, 0.0);

    let split = model_diag_split(&wedge)?;
    let report = check_simple_conditions(&split, &p.n)?;
    if !report.ok() && !p.override_conditions {
        return Err(Error::InvalidModel(format!(
            "coupling map violates the pointwise admissibility conditions \
             (kernel part {:.2e}, null form {:.2e}); the first and last rows \
             must vanish and the middle rows must be null-paired",
            report.kernel_part_norm, report.null_form_norm
        )));
    }

    // diagonal mode map: single phase between the two mixed components
    let mut l_diag = CMatrix::zeros(4, 4);
    l_diag[(1, 2)] = phase(p.theta);

    // outer walls swap the chirality of one particle with unit phase
    let mut l_left = CMatrix::zeros(4, 4);
    l_left[(2, 0)] = ONE;
    l_left[(3, 1)] = ONE;
    let mut l_top = CMatrix::zeros(4, 4);
    l_top[(0, 1)] = ONE;
    l_top[(2, 3)] = ONE;

    let model = ModelSpec {
        sectors: vec![line, wedge],
        couplings: vec![CouplingSpec {
            source_sector: 1,
            face: Face::WedgeDiagonal,
            target_sector: 0,
            map: CouplingMap::DiagonalToLine,
            nu_weight: 2.0f64.sqrt(),
            l: l_diag,
            n: p.n.clone(),
        }],
        walls: vec![
            WallSpec {
                sector: 1,
                face: Face::WedgeLeft,
                l: l_left,
            },
            WallSpec {
                sector: 1,
                face: Face::WedgeTop,
                l: l_top,
            },
            WallSpec {
                sector: 0,
                face: Face::IntervalLeft,
                l: left_phase_wall(0.0),
            },
            WallSpec {
                sector: 0,
                face: Face::IntervalRight,
                l: right_phase_wall(0.0),
            },
        ],
        hbar: p.hbar,
    };
    model.validate()?;
    Ok(model)
}

fn model_diag_split(wedge: &SectorSpec) -> Result<HermitianSplit> {
    let an = wedge.face_boundary_matrix(Face::WedgeDiagonal)?;
    HermitianSplit::with_default_tol(&an)
}

/// A normalized Gaussian packet in one component of an interval sector,
/// `exp(-(x - x0)^2 / (4 sigma^2)) e^{i k x}`, vanishing elsewhere.
pub fn gaussian_state(
    model: &ModelSpec,
    sector: usize,
    comp: usize,
    center: f64,
    sigma: f64,
    momentum: f64,
) -> Result<State> {
    let spec = &model.sectors[sector];
    let layout = model.layout();
    let mut st = State::zeros(model);
    match spec.geometry {
        Geometry::Interval { .. } => {
            for node in 0..spec.node_count() {
                let x = node as f64 * spec.dx;
                let env = (-(x - center).powi(2) / (4.0 * sigma * sigma)).exp();
                let mut v = CVector::zeros(spec.spinor_dim);
                v.data[comp] = phase(momentum * x) * cr(env);
                st.set_spinor(model, &layout, sector, node, &v);
            }
        }
        Geometry::Wedge { .. } => {
            for node in 0..spec.node_count() {
                let (i, j) = spec.wedge_coords(node);
                let (x, y) = (i as f64 * spec.dx, j as f64 * spec.dx);
                let r2 = (x - center).powi(2) + (y - 2.0 * center).powi(2);
                let env = (-r2 / (4.0 * sigma * sigma)).exp();
                let mut v = CVector::zeros(spec.spinor_dim);
                v.data[comp] = phase(momentum * (x + y)) * cr(env);
                st.set_spinor(model, &layout, sector, node, &v);
            }
        }
        Geometry::Point => {
            return Err(Error::InvalidInput(
                "gaussian states live on grid sectors".into(),
            ))
        }
    }
    normalize(model, &mut st);
    Ok(st)
}

/// All probability in the point sector.
pub fn point_excited_state(model: &ModelSpec, sector: usize) -> Result<State> {
    if !matches!(model.sectors[sector].geometry, Geometry::Point) {
        return Err(Error::InvalidInput("not a point sector".into()));
    }
    let layout = model.layout();
    let mut st = State::zeros(model);
    st.data[model.dof(&layout, sector, 0, 0)] = ONE;
    Ok(st)
}

/// Normalize under trapezoid quadrature.
pub fn normalize(model: &ModelSpec, st: &mut State) {
    let n = st
        .total_norm_sqr(model, crate::sim::model::Quadrature::Trapezoid)
        .sqrt();
    if n > 0.0 {
        for v in st.data.iter_mut() {
            *v /= cr(n);
        }
    }
}

/// The 1D analog of the half-space creation coupling: equal weight on both
/// chiral components, which makes the boundary null form vanish.
pub fn balanced_coupling(strength: f64) -> CMatrix {
    CMatrix::from_real_rows(&[vec![strength], vec![strength]])
}

/// An admissible two-particle coupling map: first and last rows vanish and
/// the middle rows are phase-locked copies, which null-pairs them.
pub fn paired_coupling(row: [Complex64; 2], lock_phase: f64) -> CMatrix {
    let mut n = CMatrix::zeros(4, 2);
    for (k, v) in row.iter().enumerate() {
        n[(1, k)] = *v;
        n[(2, k)] = *v * phase(lock_phase);
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::model::Quadrature;

    #[test]
    fn point_source_accepts_balanced_and_rejects_unbalanced_couplings() {
        let good = PointSourceParams {
            x_max: 1.0,
            dx: 0.1,
            theta: 0.3,
            n: balanced_coupling(0.8),
            mass: 0.0,
            hbar: 1.0,
            override_conditions: false,
        };
        assert!(builtin_point_source(&good).is_ok());

        let bad = PointSourceParams {
            n: CMatrix::from_real_rows(&[vec![1.0], vec![0.0]]),
            override_conditions: false,
            ..good.clone()
        };
        assert!(builtin_point_source(&bad).is_err());
        let forced = PointSourceParams {
            override_conditions: true,
            ..bad
        };
        assert!(builtin_point_source(&forced).is_ok());
    }

    #[test]
    fn two_particle_model_validates_coupling_rows() {
        let good = LienertNickelParams {
            x_max: 1.0,
            dx: 0.125,
            theta: 0.0,
            n: paired_coupling([cr(1.0), cr(0.0)], 0.4),
            hbar: 1.0,
            override_conditions: false,
        };
        let model = builtin_lienert_nickel(&good).unwrap();
        assert_eq!(model.sectors[0].node_count(), 17);
        assert_eq!(model.sectors[1].spinor_dim, 4);

        let mut bad_n = paired_coupling([cr(1.0), cr(0.0)], 0.0);
        bad_n[(0, 0)] = cr(0.5);
        let bad = LienertNickelParams {
            n: bad_n,
            ..good.clone()
        };
        assert!(builtin_lienert_nickel(&bad).is_err());
    }

    #[test]
    fn gaussian_is_normalized() {
        let model = builtin_interval(1.0, 0.01, 0.0, 0.0, 0.0, 1.0).unwrap();
        let st = gaussian_state(&model, 0, 0, 0.5, 0.06, 80.0).unwrap();
        let n = st.total_norm_sqr(&model, Quadrature::Trapezoid);
        assert!((n - 1.0).abs() < 1e-12);
    }
}
