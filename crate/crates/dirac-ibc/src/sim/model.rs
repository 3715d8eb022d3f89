//! Model description for discretized multi-sector dynamics: sector
//! geometries and grids, coefficient matrices, boundary couplings between
//! sectors, reflecting walls, and grid states.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lagrangian::{unitarity_defect, ReflectingBC};
use crate::matrix::{CMatrix, CVector};
use crate::spin::normal_matrix;
use crate::split::{HermitianSplit, DEFAULT_ZERO_TOL, HERM_TOL};

/// Sector configuration-space shapes. Intervals and wedges are discretized
/// on uniform grids that include their boundary nodes; the point sector is a
/// single complex amplitude.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Geometry {
    Point,
    Interval { x_max: f64 },
    /// `{ 0 <= z1 <= z2 <= x_max }`, grid nodes `(i, j)` with `i <= j`.
    Wedge { x_max: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SectorSpec {
    pub name: String,
    pub geometry: Geometry,
    /// Grid spacing (ignored for the point sector).
    pub dx: f64,
    pub spinor_dim: usize,
    /// One Hermitian coefficient matrix per direction (constant in space).
    pub a_mats: Vec<CMatrix>,
    /// Hermitian zero-order term (mass matrix and the like).
    pub b: CMatrix,
}

/// Boundary faces, identified per geometry.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq, Hash)]
#[serde(rename_all = "snake_case")]
pub enum Face {
    IntervalLeft,
    IntervalRight,
    WedgeDiagonal,
    WedgeLeft,
    WedgeTop,
}

impl Face {
    /// Inward unit normal of the face.
    pub fn inward_normal(&self) -> Vec<f64> {
        let s = 1.0 / 2.0f64.sqrt();
        match self {
            Face::IntervalLeft => vec![1.0],
            Face::IntervalRight => vec![-1.0],
            Face::WedgeDiagonal => vec![-s, s],
            Face::WedgeLeft => vec![1.0, 0.0],
            Face::WedgeTop => vec![0.0, -1.0],
        }
    }
}

/// How boundary configurations map to interior configurations of the target
/// sector. Only the two shapes used by the bundled models are encoded: all
/// boundary points to the single point-sector configuration, or the wedge
/// diagonal `(z, z) -> z` onto a line sector.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum CouplingMap {
    ToPoint,
    DiagonalToLine,
}

/// A boundary coupling: the face of `source_sector` exchanges probability
/// with interior points of `target_sector`. `l` is the reflecting-type mode
/// map on the source boundary fiber, `n` the coupling map from the target
/// fiber into the source fiber; `n = 0` reduces to a reflecting wall.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CouplingSpec {
    pub source_sector: usize,
    pub face: Face,
    pub target_sector: usize,
    pub map: CouplingMap,
    /// Weight of the boundary measure relative to the target volume measure.
    pub nu_weight: f64,
    pub l: CMatrix,
    pub n: CMatrix,
}

/// A reflecting wall on an uncoupled face; stores just the mode map, the
/// boundary split is derived from the sector coefficients and the face
/// normal.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WallSpec {
    pub sector: usize,
    pub face: Face,
    pub l: CMatrix,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelSpec {
    pub sectors: Vec<SectorSpec>,
    pub couplings: Vec<CouplingSpec>,
    pub walls: Vec<WallSpec>,
    pub hbar: f64,
}

/// Quadrature used for norms and boundary integrals on the grids.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    /// Cell volumes halved on boundary faces (summation-by-parts pairing).
    Trapezoid,
    /// Equal cells everywhere (exact-transport bookkeeping).
    Uniform,
}

impl SectorSpec {
    /// Largest per-axis node index.
    pub fn max_index(&self) -> usize {
        match self.geometry {
            Geometry::Point => 0,
            Geometry::Interval { x_max } | Geometry::Wedge { x_max } => {
                (x_max / self.dx).round() as usize
            }
        }
    }

    pub fn node_count(&self) -> usize {
        match self.geometry {
            Geometry::Point => 1,
            Geometry::Interval { .. } => self.max_index() + 1,
            Geometry::Wedge { .. } => {
                let j = self.max_index() + 1;
                j * (j + 1) / 2
            }
        }
    }

    pub fn dof_count(&self) -> usize {
        self.node_count() * self.spinor_dim
    }

    /// Flat node index of the wedge point `(i, j)`, `i <= j`.
    pub fn wedge_node(&self, i: usize, j: usize) -> usize {
        let jmax = self.max_index();
        debug_assert!(i <= j && j <= jmax);
        // row i holds j = i..=jmax and starts after rows of lengths
        // (jmax+1), (jmax), ..., summing to i(jmax+1) - i(i-1)/2
        i * (jmax + 1) - i * (i.saturating_sub(1)) / 2 + (j - i)
    }

    /// Inverse of [`SectorSpec::wedge_node`].
    pub fn wedge_coords(&self, node: usize) -> (usize, usize) {
        let jmax = self.max_index();
        let mut i = 0usize;
        let mut base = 0usize;
        loop {
            let row_len = jmax + 1 - i;
            if node < base + row_len {
                return (i, i + (node - base));
            }
            base += row_len;
            i += 1;
        }
    }

    /// Node weights under the given quadrature.
    pub fn node_weights(&self, quad: Quadrature) -> Vec<f64> {
        match self.geometry {
            Geometry::Point => vec![1.0],
            Geometry::Interval { .. } => {
                let jmax = self.max_index();
                (0..=jmax)
                    .map(|j| {
                        let mut w = self.dx;
                        if quad == Quadrature::Trapezoid && (j == 0 || j == jmax) {
                            w *= 0.5;
                        }
                        w
                    })
                    .collect()
            }
            Geometry::Wedge { .. } => {
                let jmax = self.max_index();
                let mut out = Vec::with_capacity(self.node_count());
                for i in 0..=jmax {
                    for j in i..=jmax {
                        let mut w = self.dx * self.dx;
                        if quad == Quadrature::Trapezoid {
                            if i == j {
                                w *= 0.5;
                            }
                            if i == 0 {
                                w *= 0.5;
                            }
                            if j == jmax {
                                w *= 0.5;
                            }
                        }
                        out.push(w);
                    }
                }
                out
            }
        }
    }

    /// Faces this geometry has.
    pub fn faces(&self) -> Vec<Face> {
        match self.geometry {
            Geometry::Point => vec![],
            Geometry::Interval { .. } => vec![Face::IntervalLeft, Face::IntervalRight],
            Geometry::Wedge { .. } => {
                vec![Face::WedgeDiagonal, Face::WedgeLeft, Face::WedgeTop]
            }
        }
    }

    /// Node indices on a face.
    pub fn face_nodes(&self, face: Face) -> Result<Vec<usize>> {
        let jmax = self.max_index();
        match (face, &self.geometry) {
            (Face::IntervalLeft, Geometry::Interval { .. }) => Ok(vec![0]),
            (Face::IntervalRight, Geometry::Interval { .. }) => Ok(vec![jmax]),
            (Face::WedgeDiagonal, Geometry::Wedge { .. }) => {
                Ok((0..=jmax).map(|k| self.wedge_node(k, k)).collect())
            }
            (Face::WedgeLeft, Geometry::Wedge { .. }) => {
                Ok((0..=jmax).map(|j| self.wedge_node(0, j)).collect())
            }
            (Face::WedgeTop, Geometry::Wedge { .. }) => {
                Ok((0..=jmax).map(|i| self.wedge_node(i, jmax)).collect())
            }
            _ => Err(Error::InvalidModel(format!(
                "face {face:?} does not belong to geometry {:?}",
                self.geometry
            ))),
        }
    }

    /// Boundary-measure weights of the face nodes (aligned with
    /// [`SectorSpec::face_nodes`]).
    pub fn face_weights(&self, face: Face, quad: Quadrature) -> Result<Vec<f64>> {
        let nodes = self.face_nodes(face)?;
        let jmax = self.max_index();
        let line = |scale: f64| -> Vec<f64> {
            (0..=jmax)
                .map(|k| {
                    let mut w = scale * self.dx;
                    if quad == Quadrature::Trapezoid && (k == 0 || k == jmax) {
                        w *= 0.5;
                    }
                    w
                })
                .collect()
        };
        match face {
            Face::IntervalLeft | Face::IntervalRight => Ok(vec![1.0; nodes.len()]),
            Face::WedgeDiagonal => Ok(line(2.0f64.sqrt())),
            Face::WedgeLeft | Face::WedgeTop => Ok(line(1.0)),
        }
    }

    /// Boundary matrix of a face: inward normal contracted with the
    /// coefficient matrices.
    pub fn face_boundary_matrix(&self, face: Face) -> Result<CMatrix> {
        let n = face.inward_normal();
        normal_matrix(&self.a_mats, &n)
    }

    pub fn validate(&self) -> Result<()> {
        let d = match self.geometry {
            Geometry::Point => 0,
            Geometry::Interval { .. } => 1,
            Geometry::Wedge { .. } => 2,
        };
        if self.a_mats.len() != d {
            return Err(Error::InvalidModel(format!(
                "sector '{}' needs {d} coefficient matrices, has {}",
                self.name,
                self.a_mats.len()
            )));
        }
        if d > 0 {
            if self.dx <= 0.0 {
                return Err(Error::InvalidModel(format!(
                    "sector '{}' has nonpositive grid spacing",
                    self.name
                )));
            }
            let x_max = match self.geometry {
                Geometry::Interval { x_max } | Geometry::Wedge { x_max } => x_max,
                Geometry::Point => unreachable!(),
            };
            let steps = x_max / self.dx;
            if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) || steps.round() < 1.0 {
                return Err(Error::InvalidModel(format!(
                    "sector '{}': extent {x_max} is not a positive multiple of dx {}",
                    self.name, self.dx
                )));
            }
        }
        for a in &self.a_mats {
            if a.rows() != self.spinor_dim || !a.is_hermitian(HERM_TOL) {
                return Err(Error::InvalidModel(format!(
                    "sector '{}': coefficient matrices must be Hermitian of size {}",
                    self.name, self.spinor_dim
                )));
            }
        }
        // With constant coefficients the zero-order term must be Hermitian
        // for the probability current to close.
        if self.b.rows() != self.spinor_dim || !self.b.is_hermitian(HERM_TOL) {
            return Err(Error::InvalidModel(format!(
                "sector '{}': zero-order term must be Hermitian of size {}",
                self.name, self.spinor_dim
            )));
        }
        Ok(())
    }
}

/// Per-sector degree-of-freedom layout inside the flat state vector.
#[derive(Clone, Debug)]
pub struct Layout {
    pub offsets: Vec<usize>,
    pub total: usize,
}

impl ModelSpec {
    pub fn layout(&self) -> Layout {
        let mut offsets = Vec::with_capacity(self.sectors.len());
        let mut total = 0usize;
        for s in &self.sectors {
            offsets.push(total);
            total += s.dof_count();
        }
        Layout { offsets, total }
    }

    pub fn dof(&self, layout: &Layout, sector: usize, node: usize, comp: usize) -> usize {
        layout.offsets[sector] + node * self.sectors[sector].spinor_dim + comp
    }

    /// Flat per-dof weights (node weight repeated over spinor components).
    pub fn dof_weights(&self, quad: Quadrature) -> Vec<f64> {
        let mut out = Vec::new();
        for s in &self.sectors {
            for w in s.node_weights(quad) {
                for _ in 0..s.spinor_dim {
                    out.push(w);
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.hbar <= 0.0 {
            return Err(Error::InvalidModel("hbar must be positive".into()));
        }
        for s in &self.sectors {
            s.validate()?;
        }
        // every boundary face covered exactly once
        let mut covered: Vec<(usize, Face)> = Vec::new();
        for c in &self.couplings {
            self.check_coupling(c)?;
            covered.push((c.source_sector, c.face));
        }
        for w in &self.walls {
            let sector = self
                .sectors
                .get(w.sector)
                .ok_or_else(|| Error::InvalidModel("wall sector out of range".into()))?;
            sector.face_nodes(w.face)?;
            let an = sector.face_boundary_matrix(w.face)?;
            let split = HermitianSplit::new(&an, DEFAULT_ZERO_TOL)?;
            let defect = unitarity_defect(&w.l, &split);
            if defect > 1e-8 {
                return Err(Error::NotUnitary { residual: defect });
            }
            covered.push((w.sector, w.face));
        }
        for (k, pair) in covered.iter().enumerate() {
            if covered[k + 1..].contains(pair) {
                return Err(Error::InvalidModel(format!(
                    "face {:?} of sector {} is covered twice",
                    pair.1, pair.0
                )));
            }
        }
        for (si, s) in self.sectors.iter().enumerate() {
            for f in s.faces() {
                if !covered.contains(&(si, f)) {
                    return Err(Error::InvalidModel(format!(
                        "face {f:?} of sector {si} is not covered by a wall or coupling"
                    )));
                }
            }
        }
        Ok(())
    }

    fn check_coupling(&self, c: &CouplingSpec) -> Result<()> {
        let src = self
            .sectors
            .get(c.source_sector)
            .ok_or_else(|| Error::InvalidModel("coupling source out of range".into()))?;
        let tgt = self
            .sectors
            .get(c.target_sector)
            .ok_or_else(|| Error::InvalidModel("coupling target out of range".into()))?;
        src.face_nodes(c.face)?;
        if c.n.rows() != src.spinor_dim || c.n.cols() != tgt.spinor_dim {
            return Err(Error::InvalidModel(format!(
                "coupling map must be {} x {}, got {} x {}",
                src.spinor_dim,
                tgt.spinor_dim,
                c.n.rows(),
                c.n.cols()
            )));
        }
        if c.nu_weight <= 0.0 {
            return Err(Error::InvalidModel(
                "boundary measure weight must be positive".into(),
            ));
        }
        match (c.map, &tgt.geometry, &src.geometry) {
            (CouplingMap::ToPoint, Geometry::Point, _) => {}
            (
                CouplingMap::DiagonalToLine,
                Geometry::Interval { x_max },
                Geometry::Wedge { x_max: wx },
            ) => {
                if c.face != Face::WedgeDiagonal {
                    return Err(Error::InvalidModel(
                        "diagonal coupling must start from the wedge diagonal".into(),
                    ));
                }
                if (x_max - wx).abs() > 1e-12 * x_max.max(1.0) {
                    return Err(Error::InvalidModel(
                        "line and wedge extents must agree for the diagonal coupling".into(),
                    ));
                }
                let ratio = src.dx / tgt.dx;
                if (ratio - 1.0).abs() > 1e-9 && (ratio - 2.0).abs() > 1e-9 {
                    return Err(Error::InvalidModel(
                        "line spacing must equal the wedge spacing or half of it".into(),
                    ));
                }
            }
            _ => {
                return Err(Error::InvalidModel(
                    "unsupported coupling map for these sector geometries".into(),
                ));
            }
        }
        let an = src.face_boundary_matrix(c.face)?;
        let split = HermitianSplit::new(&an, DEFAULT_ZERO_TOL)?;
        let defect = unitarity_defect(&c.l, &split);
        if defect > 1e-8 {
            return Err(Error::NotUnitary { residual: defect });
        }
        Ok(())
    }

    /// Derived boundary split of a coupling or wall face.
    pub fn face_split(&self, sector: usize, face: Face) -> Result<HermitianSplit> {
        let an = self.sectors[sector].face_boundary_matrix(face)?;
        HermitianSplit::new(&an, DEFAULT_ZERO_TOL)
    }

    /// Build a wall from a full reflecting-boundary-condition object,
    /// checking that its boundary matrix matches the face.
    pub fn wall_from_bc(&self, sector: usize, face: Face, bc: &ReflectingBC) -> Result<WallSpec> {
        let an = self.sectors[sector].face_boundary_matrix(face)?;
        if !bc.split.a.approx_eq(&an, 1e-9) {
            return Err(Error::InvalidModel(
                "boundary condition was built for a different boundary matrix".into(),
            ));
        }
        Ok(WallSpec {
            sector,
            face,
            l: bc.l.clone(),
        })
    }
}

/// A grid state: one flat complex vector in model layout order plus time.
#[derive(Clone, Debug)]
pub struct State {
    pub t: f64,
    pub data: Vec<Complex64>,
}

impl State {
    pub fn zeros(model: &ModelSpec) -> Self {
        State {
            t: 0.0,
            data: vec![Complex64::new(0.0, 0.0); model.layout().total],
        }
    }

    /// Value of one spinor at a node.
    pub fn spinor(
        &self,
        model: &ModelSpec,
        layout: &Layout,
        sector: usize,
        node: usize,
    ) -> CVector {
        let r = model.sectors[sector].spinor_dim;
        let base = model.dof(layout, sector, node, 0);
        CVector::from_slice(&self.data[base..base + r])
    }

    pub fn set_spinor(
        &mut self,
        model: &ModelSpec,
        layout: &Layout,
        sector: usize,
        node: usize,
        v: &CVector,
    ) {
        let r = model.sectors[sector].spinor_dim;
        let base = model.dof(layout, sector, node, 0);
        self.data[base..base + r].copy_from_slice(&v.data);
    }

    /// Squared norm of one sector under the given quadrature.
    pub fn sector_norm_sqr(&self, model: &ModelSpec, sector: usize, quad: Quadrature) -> f64 {
        let layout = model.layout();
        let s = &model.sectors[sector];
        let weights = s.node_weights(quad);
        let mut acc = 0.0;
        for (node, &w) in weights.iter().enumerate() {
            let base = model.dof(&layout, sector, node, 0);
            for c in 0..s.spinor_dim {
                acc += w * self.data[base + c].norm_sqr();
            }
        }
        acc
    }

    pub fn total_norm_sqr(&self, model: &ModelSpec, quad: Quadrature) -> f64 {
        (0..model.sectors.len())
            .map(|s| self.sector_norm_sqr(model, s, quad))
            .sum()
    }

    /// Weighted L2 distance between two states on the same model.
    pub fn distance(&self, other: &State, model: &ModelSpec, quad: Quadrature) -> f64 {
        let w = model.dof_weights(quad);
        let mut acc = 0.0;
        for ((a, b), wi) in self.data.iter().zip(&other.data).zip(&w) {
            acc += wi * (a - b).norm_sqr();
        }
        acc.sqrt()
    }
}

/// Snapshot wire format: per-sector flattened spinor arrays.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub sectors: Vec<SectorSnapshot>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SectorSnapshot {
    pub name: String,
    pub values: CVector,
}

impl Snapshot {
    pub fn from_state(model: &ModelSpec, state: &State) -> Self {
        let layout = model.layout();
        let sectors = model
            .sectors
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let base = layout.offsets[i];
                SectorSnapshot {
                    name: s.name.clone(),
                    values: CVector::from_slice(&state.data[base..base + s.dof_count()]),
                }
            })
            .collect();
        Snapshot {
            t: state.t,
            sectors,
        }
    }

    pub fn into_state(self, model: &ModelSpec) -> Result<State> {
        let layout = model.layout();
        let mut state = State::zeros(model);
        state.t = self.t;
        if self.sectors.len() != model.sectors.len() {
            return Err(Error::InvalidInput("snapshot sector count mismatch".into()));
        }
        for (i, s) in self.sectors.into_iter().enumerate() {
            if s.values.dim() != model.sectors[i].dof_count() {
                return Err(Error::InvalidInput(format!(
                    "snapshot sector {i} has {} values, expected {}",
                    s.values.dim(),
                    model.sectors[i].dof_count()
                )));
            }
            let base = layout.offsets[i];
            state.data[base..base + s.values.dim()].copy_from_slice(&s.values.data);
        }
        Ok(state)
    }
}
