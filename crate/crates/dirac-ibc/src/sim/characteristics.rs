//! Exact-transport solver for the massless bundled models.
//!
//! At unit CFL (`dt = dx`) every chiral component of a massless model with
//! unit-speed diagonal coefficients moves exactly one lattice step per time
//! step, so free transport is an index shift and all discretization error is
//! concentrated at the boundaries. Boundary scattering is applied per node:
//! pure walls multiply the arriving amplitude by the unitary reflection
//! factor; coupled boundaries solve a small implicit (trapezoidal) system on
//! the pair (arriving amplitude, interior value), which is exactly norm
//! preserving under the uniform-cell bookkeeping.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{cr, CMatrix, CVector, I, ZERO};
use crate::sim::audit::{audit_state, face_labels, finalize_residuals, AuditReport};
use crate::sim::evolve::RunOutput;
use crate::sim::model::{
    CouplingMap, Face, Geometry, Layout, ModelSpec, Quadrature, State,
};
use crate::split::HermitianSplit;

const TOL: f64 = 1e-12;

/// The trapezoidal boundary subsystem at one coupled boundary node: the
/// arriving flux amplitude `a` scatters into the emitted amplitude `e` while
/// exchanging probability with the interior value `u`.
struct Subsystem {
    /// Pure reflection part, outgoing from arriving modes.
    phi: CMatrix,
    /// Emission from the interior value into the outgoing modes.
    gmat: CMatrix,
    nmat: CMatrix,
    /// `1 + (g / 2 hbar^2) N^dag G` and its mirrored right-hand side.
    lhs: CMatrix,
    rhs: CMatrix,
    g: f64,
    hbar: f64,
}

impl Subsystem {
    fn new(split: &HermitianSplit, l: &CMatrix, n: &CMatrix, g: f64, hbar: f64) -> Result<Self> {
        let phi = &(&split.inv_sqrt_plus() * &l.adjoint()) * &split.sqrt_minus();
        let inner = &(&l.adjoint() * &split.inv_sqrt_minus()) + &split.inv_sqrt_plus();
        let gmat = &(&split.inv_sqrt_plus() * &inner) * n;
        let kmat = &n.adjoint() * &gmat;
        let rs = n.cols();
        let id = CMatrix::identity(rs);
        let factor = g / (2.0 * hbar * hbar);
        let lhs = &id + &kmat.scale(cr(factor));
        let rhs = &id - &kmat.scale(cr(factor));
        Ok(Subsystem {
            phi,
            gmat,
            nmat: n.clone(),
            lhs,
            rhs,
            g,
            hbar,
        })
    }

    /// Advance `(a, u) -> (e, u')` over one step.
    fn interact(&self, a: &CVector, u: &CVector) -> Result<(CVector, CVector)> {
        let phi_a = self.phi.mul_vec(a);
        let drive = self.nmat.adjoint().mul_vec(&a.add(&phi_a));
        let rhs_vec = self
            .rhs
            .mul_vec(u)
            .add(&drive.scale(-I * cr(self.g / self.hbar)));
        let u_new = crate::linalg::solve_vec(&self.lhs, &rhs_vec)?;
        let u_mid = u.add(&u_new).scale(cr(0.5));
        let e = phi_a.sub(&self.gmat.mul_vec(&u_mid).scale(I / cr(self.hbar)));
        Ok((e, u_new))
    }
}

/// Action attached to one boundary face.
enum FaceAction {
    Wall { phi: CMatrix },
    Coupling { sub: Subsystem, target: usize },
}

fn wall_phi(model: &ModelSpec, sector: usize, face: Face, l: &CMatrix) -> Result<CMatrix> {
    let split = model.face_split(sector, face)?;
    Ok(&(&split.inv_sqrt_plus() * &l.adjoint()) * &split.sqrt_minus())
}

fn require(cond: bool, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidModel(format!(
            "exact transport supports only the bundled massless models: {what}"
        )))
    }
}

fn diagonal_entries(a: &CMatrix) -> Option<Vec<f64>> {
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            if i != j && a[(i, j)] != ZERO {
                return None;
            }
            if i == j && a[(i, j)].im.abs() > TOL {
                return None;
            }
        }
    }
    Some((0..a.rows()).map(|i| a[(i, i)].re).collect())
}

/// Uniform mode speed of a face split (all nonzero eigenvalues of the
/// boundary matrix must share one magnitude).
fn face_speed(split: &HermitianSplit) -> Result<f64> {
    let mut speed = None;
    for &v in &split.eigenvalues {
        if v.abs() <= split.zero_tol {
            continue;
        }
        match speed {
            None => speed = Some(v.abs()),
            Some(s) => {
                if (s - v.abs()).abs() > 1e-9 {
                    return Err(Error::InvalidModel(
                        "exact transport needs a single mode speed per face".into(),
                    ));
                }
            }
        }
    }
    speed.ok_or_else(|| Error::InvalidModel("face has no propagating modes".into()))
}

fn find_action(model: &ModelSpec, sector: usize, face: Face, dt: f64) -> Result<FaceAction> {
    for w in &model.walls {
        if w.sector == sector && w.face == face {
            return Ok(FaceAction::Wall {
                phi: wall_phi(model, sector, face, &w.l)?,
            });
        }
    }
    for c in &model.couplings {
        if c.source_sector == sector && c.face == face {
            let split = model.face_split(sector, face)?;
            let speed = face_speed(&split)?;
            let src = &model.sectors[sector];
            let tgt = &model.sectors[c.target_sector];
            let dim = match src.geometry {
                Geometry::Interval { .. } => 1,
                Geometry::Wedge { .. } => 2,
                Geometry::Point => 0,
            };
            let w_cell = src.dx.powi(dim);
            let w_target = match tgt.geometry {
                Geometry::Point => 1.0,
                _ => tgt.dx,
            };
            let g = w_cell / (w_target * speed);
            // consistency: the drive weight must reproduce dt times the
            // boundary measure weight of the generator
            let kappa = match c.map {
                CouplingMap::ToPoint => 1.0,
                CouplingMap::DiagonalToLine => c.nu_weight,
            };
            if (g - dt * kappa).abs() > 1e-9 * g.max(1.0) {
                return Err(Error::InvalidModel(
                    "grid spacings are inconsistent with exact-transport bookkeeping".into(),
                ));
            }
            let sub = Subsystem::new(&split, &c.l, &c.n, g, model.hbar)?;
            return Ok(FaceAction::Coupling {
                sub,
                target: c.target_sector,
            });
        }
    }
    Err(Error::InvalidModel(format!(
        "face {face:?} of sector {sector} has no wall or coupling"
    )))
}

/// One-dimensional chiral transport on an interval sector with boundary
/// scattering at both ends.
struct LineEngine {
    sector: usize,
    plus_comps: Vec<usize>,
    minus_comps: Vec<usize>,
    left: FaceAction,
    right: FaceAction,
}

impl LineEngine {
    fn new(model: &ModelSpec, sector: usize, dt: f64) -> Result<Self> {
        let spec = &model.sectors[sector];
        let diag = diagonal_entries(&spec.a_mats[0])
            .ok_or_else(|| Error::InvalidModel("line coefficients must be diagonal".into()))?;
        require(
            diag.iter().all(|d| (d.abs() - 1.0).abs() < TOL),
            "line mode speeds must be 1",
        )?;
        require(spec.b.max_abs() <= TOL, "massless sectors only")?;
        let plus_comps = (0..diag.len()).filter(|&c| diag[c] > 0.0).collect();
        let minus_comps = (0..diag.len()).filter(|&c| diag[c] < 0.0).collect();
        Ok(LineEngine {
            sector,
            plus_comps,
            minus_comps,
            left: find_action(model, sector, Face::IntervalLeft, dt)?,
            right: find_action(model, sector, Face::IntervalRight, dt)?,
        })
    }

    /// Advance the line by one cell (time `dx`).
    fn substep(&self, model: &ModelSpec, layout: &Layout, state: &mut State) -> Result<()> {
        let spec = &model.sectors[self.sector];
        let r = spec.spinor_dim;
        let jmax = spec.max_index();
        let dof = |node: usize, c: usize| model.dof(layout, self.sector, node, c);

        // capture the amplitudes about to cross each wall
        let mut a_left = CVector::zeros(r);
        for &c in &self.minus_comps {
            a_left.data[c] = state.data[dof(0, c)];
        }
        let mut a_right = CVector::zeros(r);
        for &c in &self.plus_comps {
            a_right.data[c] = state.data[dof(jmax, c)];
        }

        // free transport
        for &c in &self.plus_comps {
            for j in (1..=jmax).rev() {
                state.data[dof(j, c)] = state.data[dof(j - 1, c)];
            }
        }
        for &c in &self.minus_comps {
            for j in 0..jmax {
                state.data[dof(j, c)] = state.data[dof(j + 1, c)];
            }
        }

        // boundary scattering fills the vacated slots
        let e_left = self.scatter(model, layout, state, &self.left, &a_left)?;
        for &c in &self.plus_comps {
            state.data[dof(0, c)] = e_left.data[c];
        }
        let e_right = self.scatter(model, layout, state, &self.right, &a_right)?;
        for &c in &self.minus_comps {
            state.data[dof(jmax, c)] = e_right.data[c];
        }
        Ok(())
    }

    fn scatter(
        &self,
        model: &ModelSpec,
        layout: &Layout,
        state: &mut State,
        action: &FaceAction,
        a: &CVector,
    ) -> Result<CVector> {
        match action {
            FaceAction::Wall { phi } => Ok(phi.mul_vec(a)),
            FaceAction::Coupling { sub, target } => {
                let u = state.spinor(model, layout, *target, 0);
                let (e, u_new) = sub.interact(a, &u)?;
                state.set_spinor(model, layout, *target, 0, &u_new);
                Ok(e)
            }
        }
    }
}

/// Two-particle wedge engine: four chiral components with velocities
/// `(+-1, +-1)`, scattering at the diagonal into a line sector and at the
/// outer walls.
struct WedgeEngine {
    sector: usize,
    line: usize,
    /// Per arriving component, the reflected component and factor at each wall.
    left_map: Vec<(usize, Complex64)>,
    top_map: Vec<(usize, Complex64)>,
    sub: Subsystem,
    diag_retro_phase: Complex64,
}

const WEDGE_VEL: [(isize, isize); 4] = [(1, 1), (1, -1), (-1, 1), (-1, -1)];

fn flip1(c: usize) -> usize {
    c ^ 2
}

fn flip2(c: usize) -> usize {
    c ^ 1
}

/// Extract the single-component wall scattering: arriving component `c` must
/// map onto `flip(c)` with a unimodular factor.
fn component_wall_map(
    phi: &CMatrix,
    arriving: &[usize],
    flip: fn(usize) -> usize,
) -> Result<Vec<(usize, Complex64)>> {
    let mut map = vec![(usize::MAX, ZERO); phi.cols()];
    for &c in arriving {
        let target = flip(c);
        let v = phi[(target, c)];
        let mut column_norm = 0.0;
        for rown in 0..phi.rows() {
            column_norm += phi[(rown, c)].norm_sqr();
        }
        if (v.norm() - 1.0).abs() > 1e-9 || (column_norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidModel(
                "exact transport needs component-preserving wall reflections".into(),
            ));
        }
        map[c] = (target, v);
    }
    Ok(map)
}

impl WedgeEngine {
    fn new(model: &ModelSpec, sector: usize, line: usize, dt: f64) -> Result<Self> {
        let spec = &model.sectors[sector];
        require(spec.spinor_dim == 4, "wedge sectors carry four components")?;
        require(spec.b.max_abs() <= TOL, "massless sectors only")?;
        let d1 = diagonal_entries(&spec.a_mats[0])
            .ok_or_else(|| Error::InvalidModel("wedge coefficients must be diagonal".into()))?;
        let d2 = diagonal_entries(&spec.a_mats[1])
            .ok_or_else(|| Error::InvalidModel("wedge coefficients must be diagonal".into()))?;
        for c in 0..4 {
            require(
                (d1[c] - WEDGE_VEL[c].0 as f64).abs() < TOL
                    && (d2[c] - WEDGE_VEL[c].1 as f64).abs() < TOL,
                "wedge components must carry the two-particle chiral velocities",
            )?;
        }

        let mut left_phi = None;
        let mut top_phi = None;
        for w in &model.walls {
            if w.sector == sector && w.face == Face::WedgeLeft {
                left_phi = Some(wall_phi(model, sector, Face::WedgeLeft, &w.l)?);
            }
            if w.sector == sector && w.face == Face::WedgeTop {
                top_phi = Some(wall_phi(model, sector, Face::WedgeTop, &w.l)?);
            }
        }
        let left_phi =
            left_phi.ok_or_else(|| Error::InvalidModel("wedge needs a left wall".into()))?;
        let top_phi =
            top_phi.ok_or_else(|| Error::InvalidModel("wedge needs a top wall".into()))?;
        let left_map = component_wall_map(&left_phi, &[2, 3], flip1)?;
        let top_map = component_wall_map(&top_phi, &[0, 2], flip2)?;

        let action = find_action(model, sector, Face::WedgeDiagonal, dt)?;
        let (sub, target) = match action {
            FaceAction::Coupling { sub, target } => (sub, target),
            FaceAction::Wall { phi } => {
                // uncoupled diagonal: treat as a coupling with a zero map
                // into a dummy 0-dimensional target; reuse the subsystem with
                // an empty interior value
                let split = model.face_split(sector, Face::WedgeDiagonal)?;
                let n = CMatrix::zeros(4, 0);
                let mut s = Subsystem::new(&split, &CMatrix::zeros(4, 4), &n, 1.0, model.hbar)?;
                s.phi = phi;
                (s, usize::MAX)
            }
        };
        if target != usize::MAX {
            require(target == line, "the wedge diagonal must couple to the line sector")?;
        }
        let retro = sub.phi[(2, 1)];
        Ok(WedgeEngine {
            sector,
            line,
            left_map,
            top_map,
            sub,
            diag_retro_phase: if retro.norm() > 0.5 {
                retro / cr(retro.norm())
            } else {
                crate::matrix::ONE
            },
        })
    }

    fn step(&self, model: &ModelSpec, layout: &Layout, state: &mut State) -> Result<()> {
        let spec = &model.sectors[self.sector];
        let jmax = spec.max_index();
        let nodes = spec.node_count();
        let dof = |node: usize, c: usize| model.dof(layout, self.sector, node, c);

        // capture diagonal arrivals of the incoming chirality (component 1)
        let mut even_reg = vec![ZERO; jmax + 1];
        let mut odd_reg = vec![ZERO; jmax];
        for k in 0..=jmax {
            even_reg[k] = state.data[dof(spec.wedge_node(k, k), 1)];
        }
        for k in 0..jmax {
            odd_reg[k] = state.data[dof(spec.wedge_node(k, k + 1), 1)];
        }

        let mut new = vec![ZERO; nodes * 4];
        let put = |new: &mut Vec<Complex64>, node: usize, c: usize, v: Complex64| {
            new[node * 4 + c] += v;
        };

        for node in 0..nodes {
            let (i, j) = spec.wedge_coords(node);
            for c in 0..4 {
                let val = state.data[dof(node, c)];
                if val == ZERO {
                    continue;
                }
                if c == 1 && j - i <= 1 {
                    continue; // diagonal register, handled below
                }
                let (v1, v2) = WEDGE_VEL[c];
                let mut cc = c;
                let mut vv = val;
                let mut ti = i as isize + v1;
                let mut tj = j as isize + v2;
                if ti < 0 {
                    let (target, factor) = self.left_map[cc];
                    cc = target;
                    vv *= factor;
                    ti = 0;
                }
                if tj > jmax as isize {
                    let (target, factor) = self.top_map[cc];
                    cc = target;
                    vv *= factor;
                    tj = jmax as isize;
                }
                if ti > tj {
                    // corner route into the diagonal: reverse in place
                    cc = flip1(flip2(cc));
                    vv *= self.diag_retro_phase;
                    ti = i as isize;
                    tj = j as isize;
                }
                put(
                    &mut new,
                    spec.wedge_node(ti as usize, tj as usize),
                    cc,
                    vv,
                );
            }
        }

        // diagonal scattering: even class at the nodes, odd class at the
        // half-integer crossings, interacting with the matching line nodes
        let has_target = self.sub.nmat.cols() > 0;
        for k in 0..=jmax {
            let mut a = CVector::zeros(4);
            a.data[1] = even_reg[k];
            let (e, u_new) = if has_target {
                let u = state.spinor(model, layout, self.line, 2 * k);
                let (e, u_new) = self.sub.interact(&a, &u)?;
                (e, Some(u_new))
            } else {
                (self.sub.phi.mul_vec(&a), None)
            };
            if let Some(u_new) = u_new {
                state.set_spinor(model, layout, self.line, 2 * k, &u_new);
            }
            put(&mut new, spec.wedge_node(k, k), 2, e.data[2]);
        }
        for k in 0..jmax {
            let mut a = CVector::zeros(4);
            a.data[1] = odd_reg[k];
            let (e, u_new) = if has_target {
                let u = state.spinor(model, layout, self.line, 2 * k + 1);
                let (e, u_new) = self.sub.interact(&a, &u)?;
                (e, Some(u_new))
            } else {
                (self.sub.phi.mul_vec(&a), None)
            };
            if let Some(u_new) = u_new {
                state.set_spinor(model, layout, self.line, 2 * k + 1, &u_new);
            }
            put(&mut new, spec.wedge_node(k, k + 1), 2, e.data[2]);
        }

        for node in 0..nodes {
            for c in 0..4 {
                state.data[dof(node, c)] = new[node * 4 + c];
            }
        }
        Ok(())
    }
}

enum Engine {
    Lines(Vec<LineEngine>),
    TwoParticle {
        line: LineEngine,
        wedge: WedgeEngine,
    },
}

fn build_engine(model: &ModelSpec, dt: f64) -> Result<Engine> {
    model.validate()?;
    let wedges: Vec<usize> = model
        .sectors
        .iter()
        .enumerate()
        .filter(|(_, s)| matches!(s.geometry, Geometry::Wedge { .. }))
        .map(|(i, _)| i)
        .collect();
    let lines: Vec<usize> = model
        .sectors
        .iter()
        .enumerate()
        .filter(|(_, s)| matches!(s.geometry, Geometry::Interval { .. }))
        .map(|(i, _)| i)
        .collect();

    if wedges.is_empty() {
        let mut engines = Vec::new();
        for &si in &lines {
            let spec = &model.sectors[si];
            require(
                (spec.dx - dt).abs() <= 1e-12 * dt.max(1.0),
                "time step must equal the grid spacing",
            )?;
            engines.push(LineEngine::new(model, si, dt)?);
        }
        require(!engines.is_empty(), "no propagating sectors")?;
        Ok(Engine::Lines(engines))
    } else {
        require(
            wedges.len() == 1 && lines.len() == 1,
            "two-particle models pair one wedge with one line sector",
        )?;
        let (wi, li) = (wedges[0], lines[0]);
        let wspec = &model.sectors[wi];
        let lspec = &model.sectors[li];
        require(
            (wspec.dx - dt).abs() <= 1e-12 * dt.max(1.0),
            "time step must equal the wedge spacing",
        )?;
        require(
            (lspec.dx - wspec.dx / 2.0).abs() <= 1e-12 * wspec.dx,
            "line spacing must be half the wedge spacing",
        )?;
        let line = LineEngine::new(model, li, lspec.dx)?;
        let wedge = WedgeEngine::new(model, wi, li, dt)?;
        Ok(Engine::TwoParticle { line, wedge })
    }
}

/// Evolve by exact transport with boundary scattering, `steps` steps of size
/// `dt` (which must equal the propagating sectors' grid spacing). Produces
/// the same audit series as the implicit solver, under uniform-cell
/// quadrature.
pub fn evolve_characteristics_with(
    model: &ModelSpec,
    psi0: &State,
    steps: usize,
    dt: f64,
    mut on_state: impl FnMut(usize, &State),
) -> Result<RunOutput> {
    let engine = build_engine(model, dt)?;
    let layout = model.layout();
    let mut state = psi0.clone();
    let mut rows = Vec::with_capacity(steps + 1);
    rows.push(audit_state(model, &state, Quadrature::Uniform)?);
    on_state(0, &state);
    for step in 1..=steps {
        match &engine {
            Engine::Lines(engines) => {
                for e in engines {
                    e.substep(model, &layout, &mut state)?;
                }
            }
            Engine::TwoParticle { line, wedge } => {
                line.substep(model, &layout, &mut state)?;
                wedge.step(model, &layout, &mut state)?;
                line.substep(model, &layout, &mut state)?;
            }
        }
        state.t += dt;
        rows.push(audit_state(model, &state, Quadrature::Uniform)?);
        on_state(step, &state);
    }
    let mut report = AuditReport {
        quadrature: Quadrature::Uniform,
        dt,
        face_labels: face_labels(model),
        rows,
    };
    finalize_residuals(model, &mut report);
    Ok(RunOutput {
        final_state: state,
        report,
    })
}

/// Evolve to the given final time (which must be a whole number of unit-CFL
/// steps away).
pub fn evolve_characteristics(model: &ModelSpec, psi0: &State, t_final: f64) -> Result<RunOutput> {
    let dt = model
        .sectors
        .iter()
        .filter(|s| !matches!(s.geometry, Geometry::Point))
        .map(|s| s.dx)
        .fold(0.0f64, f64::max);
    if dt <= 0.0 {
        return Err(Error::InvalidModel("no propagating sectors".into()));
    }
    let span = t_final - psi0.t;
    let steps = (span / dt).round();
    if steps < 0.0 || (span - steps * dt).abs() > 1e-9 * dt {
        return Err(Error::InvalidInput(format!(
            "final time must be a whole number of steps of {dt} away"
        )));
    }
    evolve_characteristics_with(model, psi0, steps as usize, dt, |_, _| {})
}
