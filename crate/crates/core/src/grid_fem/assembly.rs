//! Galerkin assembly of `-D Δu - b·∇u + c u = f` on bilinear quadrilaterals.
//!
//! Element integrals use a two-point tensor rule with coefficients
//! interpolated bilinearly from their nodal values: 2x2 Gauss by default, or
//! the low-dispersion rule of [`Quadrature::LowDispersion`]. Advection is assembled
//! with plain Galerkin weighting (no upwinding), so the matrix is
//! non-symmetric whenever `b` is present.
//!
//! An equation written as `Δq + b·∇q = g` maps to `diffusion = 1`,
//! `advection = b`, `reaction = 0` and a load of `-g`.

use super::field::ScalarField;
use super::mesh::RectMesh;
use super::sparse::{relative_residual, BandLu, CsrMatrix, TripletBuilder};
use crate::error::{Error, Result};

const GAUSS: f64 = 0.577_350_269_189_625_8;

/// Residual every solve must reach.
pub const SOLVE_TOLERANCE: f64 = 1e-10;

/// Right-hand side of an elliptic problem.
#[derive(Debug, Clone, Default)]
pub enum Load<'a> {
    #[default]
    Zero,
    /// Source density given by nodal values, integrated against the test functions.
    Field(&'a ScalarField),
    /// Pre-integrated load vector.
    Vector(Vec<f64>),
}

/// Two-point tensor quadrature used for element integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Quadrature {
    /// 2x2 Gauss: exact stiffness and mass for bilinear elements.
    #[default]
    Gauss,
    /// Points at `±√(2/3)` on the reference interval. The resulting mass is
    /// the average of the consistent and lumped matrices in each direction,
    /// which cancels the leading dispersion error of `-Δu + k²u`. Meant for
    /// decaying solutions over many wavelengths `1/k`.
    LowDispersion,
}

impl Quadrature {
    fn abscissa(self) -> f64 {
        match self {
            Quadrature::Gauss => GAUSS,
            Quadrature::LowDispersion => (2.0f64 / 3.0).sqrt(),
        }
    }
}

/// Coefficients of `-diffusion Δu - advection·∇u + reaction u = load`.
#[derive(Debug, Clone)]
pub struct EllipticProblem<'a> {
    pub diffusion: f64,
    pub advection: Option<(&'a ScalarField, &'a ScalarField)>,
    pub reaction: Option<&'a ScalarField>,
    pub load: Load<'a>,
    pub quadrature: Quadrature,
}

impl<'a> EllipticProblem<'a> {
    pub fn laplace() -> Self {
        Self { diffusion: 1.0, advection: None, reaction: None, load: Load::Zero, quadrature: Quadrature::Gauss }
    }
}

/// Robin condition `∂u/∂n + kappa u = 0` on every side of the mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobinSpec {
    kappa: f64,
}

impl RobinSpec {
    pub fn new(kappa: f64) -> Result<Self> {
        if kappa.is_finite() && kappa > 0.0 {
            Ok(Self { kappa })
        } else {
            Err(Error::NonPositiveRobin(kappa))
        }
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
}

/// Assembled linear system together with its boundary bookkeeping.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    mesh: RectMesh,
    diffusion: f64,
    matrix: CsrMatrix,
    rhs: Vec<f64>,
    constrained: Vec<(usize, f64)>,
    robin: Option<RobinSpec>,
    clamped_reaction: usize,
}

/// Shape-function tables at the four Gauss points of the unit square.
struct RefElement {
    n: [[f64; 4]; 4],
    dtx: [[f64; 4]; 4],
    dtz: [[f64; 4]; 4],
}

impl RefElement {
    fn new(g: f64) -> Self {
        let pts = [0.5 * (1.0 - g), 0.5 * (1.0 + g)];
        let mut n = [[0.0; 4]; 4];
        let mut dtx = [[0.0; 4]; 4];
        let mut dtz = [[0.0; 4]; 4];
        let mut q = 0;
        for &tz in &pts {
            for &tx in &pts {
                n[q] = [(1.0 - tx) * (1.0 - tz), tx * (1.0 - tz), tx * tz, (1.0 - tx) * tz];
                dtx[q] = [-(1.0 - tz), 1.0 - tz, tz, -tz];
                dtz[q] = [-(1.0 - tx), -tx, tx, 1.0 - tx];
                q += 1;
            }
        }
        Self { n, dtx, dtz }
    }
}

#[inline]
fn at_gauss(n: &[f64; 4], nodal: &[f64; 4]) -> f64 {
    n[0] * nodal[0] + n[1] * nodal[1] + n[2] * nodal[2] + n[3] * nodal[3]
}

fn check_mesh(mesh: &RectMesh, field: &ScalarField, what: &str) -> Result<()> {
    if field.mesh().same_grid(mesh) {
        Ok(())
    } else {
        Err(Error::MeshMismatch(format!("{what} lives on a different mesh")))
    }
}

/// Assemble the Galerkin system. Negative reaction values are clamped to zero
/// and counted in [`SparseSystem::clamped_reaction_nodes`].
pub fn assemble_elliptic(mesh: &RectMesh, problem: &EllipticProblem<'_>) -> Result<SparseSystem> {
    if let Some((bx, bz)) = problem.advection {
        check_mesh(mesh, bx, "advection x-component")?;
        check_mesh(mesh, bz, "advection z-component")?;
    }
    let mut clamped = 0;
    let reaction: Option<Vec<f64>> = match problem.reaction {
        Some(r) => {
            check_mesh(mesh, r, "reaction")?;
            Some(
                r.values()
                    .iter()
                    .map(|&c| {
                        if c < 0.0 {
                            clamped += 1;
                            0.0
                        } else {
                            c
                        }
                    })
                    .collect(),
            )
        }
        None => None,
    };
    let n = mesh.node_count();
    let rhs = match &problem.load {
        Load::Zero => vec![0.0; n],
        Load::Field(f) => {
            check_mesh(mesh, f, "load")?;
            mass_times(mesh, f.values())
        }
        Load::Vector(v) => {
            if v.len() != n {
                return Err(Error::MeshMismatch(format!("load vector has {} entries, mesh has {n} nodes", v.len())));
            }
            v.clone()
        }
    };
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("load contains non-finite values".into()));
    }

    let re = RefElement::new(problem.quadrature.abscissa());
    let (hx, hz) = (mesh.hx(), mesh.hz());
    let w = hx * hz / 4.0;
    let d = problem.diffusion;
    let mut builder = TripletBuilder::with_capacity(n, mesh.element_count() * 16);
    for ej in 0..mesh.nz() {
        for ei in 0..mesh.nx() {
            let nodes = mesh.element_nodes(ei, ej);
            let bx = problem.advection.map(|(bx, _)| nodes.map(|k| bx.values()[k]));
            let bz = problem.advection.map(|(_, bz)| nodes.map(|k| bz.values()[k]));
            let c = reaction.as_ref().map(|r| nodes.map(|k| r[k]));
            let mut local = [[0.0; 4]; 4];
            for q in 0..4 {
                let nq = &re.n[q];
                let gx = re.dtx[q].map(|v| v / hx);
                let gz = re.dtz[q].map(|v| v / hz);
                let bxq = bx.as_ref().map_or(0.0, |v| at_gauss(nq, v));
                let bzq = bz.as_ref().map_or(0.0, |v| at_gauss(nq, v));
                let cq = c.as_ref().map_or(0.0, |v| at_gauss(nq, v));
                for a in 0..4 {
                    for b in 0..4 {
                        let stiff = d * (gx[a] * gx[b] + gz[a] * gz[b]);
                        let adv = -(bxq * gx[b] + bzq * gz[b]) * nq[a];
                        let mass = cq * nq[a] * nq[b];
                        local[a][b] += w * (stiff + adv + mass);
                    }
                }
            }
            for a in 0..4 {
                for b in 0..4 {
                    builder.add(nodes[a], nodes[b], local[a][b]);
                }
            }
        }
    }
    let matrix = builder.build();
    debug_assert!(matrix.has_full_diagonal());
    Ok(SparseSystem { mesh: *mesh, diffusion: d, matrix, rhs, constrained: Vec::new(), robin: None, clamped_reaction: clamped })
}

/// Consistent mass matrix applied to nodal values: `∫ f_h η_i`.
pub fn mass_times(mesh: &RectMesh, values: &[f64]) -> Vec<f64> {
    let w = mesh.hx() * mesh.hz() / 36.0;
    // exact bilinear element mass matrix, scaled by 36 / (hx hz)
    const M: [[f64; 4]; 4] = [[4.0, 2.0, 1.0, 2.0], [2.0, 4.0, 2.0, 1.0], [1.0, 2.0, 4.0, 2.0], [2.0, 1.0, 2.0, 4.0]];
    let mut out = vec![0.0; mesh.node_count()];
    for ej in 0..mesh.nz() {
        for ei in 0..mesh.nx() {
            let nodes = mesh.element_nodes(ei, ej);
            for a in 0..4 {
                let mut s = 0.0;
                for b in 0..4 {
                    s += M[a][b] * values[nodes[b]];
                }
                out[nodes[a]] += w * s;
            }
        }
    }
    out
}

/// Load vector of a unit point source at `(x, z)`: `η_i(x, z)` for every node.
///
/// A source on a side of the mesh keeps half of its mass (a quarter at a
/// corner), the share that radiates into the domain. This matches the
/// whole-plane solution restricted to the domain.
pub fn point_source_load(mesh: &RectMesh, x: f64, z: f64) -> Result<Vec<f64>> {
    let cell = mesh.locate(x, z)?;
    let tol = 1e-12 * (mesh.hx() + mesh.hz());
    let on_side = |v: f64, lo: f64, hi: f64| (v - lo).abs() <= tol || (v - hi).abs() <= tol;
    let mut mass = 1.0;
    if on_side(x, mesh.x_min(), mesh.x_max()) {
        mass *= 0.5;
    }
    if on_side(z, mesh.z_min(), mesh.z_max()) {
        mass *= 0.5;
    }
    let (tx, tz) = (cell.tx, cell.tz);
    let weights = [(1.0 - tx) * (1.0 - tz), tx * (1.0 - tz), tx * tz, (1.0 - tx) * tz];
    let mut load = vec![0.0; mesh.node_count()];
    for (node, w) in mesh.element_nodes(cell.i, cell.j).into_iter().zip(weights) {
        load[node] += mass * w;
    }
    Ok(load)
}

impl SparseSystem {
    pub fn mesh(&self) -> &RectMesh {
        &self.mesh
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn constrained(&self) -> &[(usize, f64)] {
        &self.constrained
    }

    pub fn robin(&self) -> Option<RobinSpec> {
        self.robin
    }

    /// Number of nodes whose negative reaction value was clamped to zero.
    pub fn clamped_reaction_nodes(&self) -> usize {
        self.clamped_reaction
    }

    /// Replace the right-hand side (before any Dirichlet data is applied).
    pub fn with_rhs(mut self, rhs: Vec<f64>) -> Result<Self> {
        if rhs.len() != self.mesh.node_count() {
            return Err(Error::MeshMismatch("rhs length".into()));
        }
        self.rhs = rhs;
        Ok(self)
    }

    /// Constrain every boundary node. Columns of constrained nodes are moved
    /// into the right-hand side so the free block keeps its symmetry.
    pub fn apply_dirichlet(mut self, values: &[(usize, f64)]) -> Result<Self> {
        let n = self.mesh.node_count();
        let mut prescribed: Vec<Option<f64>> = vec![None; n];
        for &(node, v) in values {
            if node >= n {
                return Err(Error::MeshMismatch(format!("node {node} out of range")));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite { node });
            }
            prescribed[node] = Some(v);
        }
        if let Some(node) = self.mesh.boundary_nodes().into_iter().find(|&b| prescribed[b].is_none()) {
            return Err(Error::MissingBoundaryValue { node });
        }
        for r in 0..n {
            if prescribed[r].is_some() {
                continue;
            }
            let (cols, vals) = self.matrix.row_mut(r);
            let mut shift = 0.0;
            for (k, &c) in cols.iter().enumerate() {
                if let Some(g) = prescribed[c] {
                    shift += vals[k] * g;
                    vals[k] = 0.0;
                }
            }
            self.rhs[r] -= shift;
        }
        for r in 0..n {
            if let Some(g) = prescribed[r] {
                let (cols, vals) = self.matrix.row_mut(r);
                for (k, &c) in cols.iter().enumerate() {
                    vals[k] = if c == r { 1.0 } else { 0.0 };
                }
                self.rhs[r] = g;
            }
        }
        self.constrained = prescribed.iter().enumerate().filter_map(|(i, g)| g.map(|g| (i, g))).collect();
        Ok(self)
    }

    /// Dirichlet data taken from a field's boundary nodes.
    pub fn apply_dirichlet_from(self, field: &ScalarField) -> Result<Self> {
        check_mesh(&self.mesh, field, "Dirichlet data")?;
        let values: Vec<(usize, f64)> = self.mesh.boundary_nodes().into_iter().map(|b| (b, field.values()[b])).collect();
        self.apply_dirichlet(&values)
    }

    /// Add `diffusion * kappa * ∮ u η` on all four sides (2-point Gauss per edge).
    pub fn apply_robin(self, spec: RobinSpec) -> Result<Self> {
        let kappa = spec.kappa();
        let mut out = self.apply_robin_with(|_, _, _| kappa)?;
        out.robin = Some(spec);
        Ok(out)
    }

    /// Robin terms with a coefficient that varies along the boundary.
    /// The closure receives the quadrature point and the outward unit normal.
    pub fn apply_robin_with(mut self, kappa: impl Fn(f64, f64, (f64, f64)) -> f64) -> Result<Self> {
        if !self.constrained.is_empty() {
            return Err(Error::Domain("Robin terms cannot be added after Dirichlet constraints".into()));
        }
        let m = self.mesh;
        let mut edges: Vec<(usize, usize, f64, (f64, f64))> = Vec::new();
        for i in 0..m.nx() {
            edges.push((m.node(i, 0), m.node(i + 1, 0), m.hx(), (0.0, -1.0)));
            edges.push((m.node(i, m.nz()), m.node(i + 1, m.nz()), m.hx(), (0.0, 1.0)));
        }
        for j in 0..m.nz() {
            edges.push((m.node(0, j), m.node(0, j + 1), m.hz(), (-1.0, 0.0)));
            edges.push((m.node(m.nx(), j), m.node(m.nx(), j + 1), m.hz(), (1.0, 0.0)));
        }
        let p = [0.5 * (1.0 - GAUSS), 0.5 * (1.0 + GAUSS)];
        for (a, b, len, normal) in edges {
            let (xa, za) = m.coords(a);
            let (xb, zb) = m.coords(b);
            let mut local = [[0.0; 2]; 2];
            for &t in &p {
                let k = kappa(xa + (xb - xa) * t, za + (zb - za) * t, normal);
                if !k.is_finite() || k < 0.0 {
                    return Err(Error::NonPositiveRobin(k));
                }
                let coef = self.diffusion * k;
                let phi = [1.0 - t, t];
                for r in 0..2 {
                    for c in 0..2 {
                        local[r][c] += 0.5 * len * coef * phi[r] * phi[c];
                    }
                }
            }
            let nodes = [a, b];
            for r in 0..2 {
                for c in 0..2 {
                    let pos = self.matrix.find(nodes[r], nodes[c]).expect("edge pair is in the element pattern");
                    *self.matrix.value_mut(pos) += local[r][c];
                }
            }
        }
        Ok(self)
    }

    /// Factor once for repeated right-hand sides.
    pub fn factor(&self) -> Result<FactoredSystem> {
        let lu = BandLu::factor(&self.matrix)?;
        Ok(FactoredSystem { mesh: self.mesh, matrix: self.matrix.clone(), lu, constrained: self.constrained.clone() })
    }

    pub fn solve(&self) -> Result<ScalarField> {
        self.factor()?.solve_rhs(&self.rhs)
    }
}

/// LU factors of a system, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct FactoredSystem {
    mesh: RectMesh,
    matrix: CsrMatrix,
    lu: BandLu,
    constrained: Vec<(usize, f64)>,
}

impl FactoredSystem {
    /// Solve with an arbitrary right-hand side, refining until the residual
    /// contract holds. Constrained rows take whatever values `rhs` carries.
    pub fn solve_rhs(&self, rhs: &[f64]) -> Result<ScalarField> {
        if rhs.len() != self.mesh.node_count() {
            return Err(Error::MeshMismatch("rhs length".into()));
        }
        let mut x = self.lu.solve(rhs);
        let mut res = relative_residual(&self.matrix, &x, rhs);
        let mut refinements = 0;
        while res > SOLVE_TOLERANCE && refinements < 3 {
            let ax = self.matrix.mul_vec(&x);
            let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
            let dx = self.lu.solve(&r);
            x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
            res = relative_residual(&self.matrix, &x, rhs);
            refinements += 1;
        }
        if !(res <= SOLVE_TOLERANCE) || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::SolverFailure { residual: res });
        }
        ScalarField::new(self.mesh, x)
    }

    pub fn constrained(&self) -> &[(usize, f64)] {
        &self.constrained
    }
}

/// Solve with the default direct path.
pub fn solve(system: &SparseSystem) -> Result<ScalarField> {
    system.solve()
}

/// Solve with Jacobi-preconditioned BiCGSTAB under the same residual contract.
pub fn solve_iterative(system: &SparseSystem, max_iter: usize) -> Result<ScalarField> {
    let (x, res) = super::sparse::bicgstab(&system.matrix, &system.rhs, SOLVE_TOLERANCE, max_iter);
    if !(res <= SOLVE_TOLERANCE) || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SolverFailure { residual: res });
    }
    ScalarField::new(system.mesh, x)
}

/// Nodal gradient: central differences inside, second-order one-sided stencils on the boundary.
pub fn gradient(field: &ScalarField) -> Result<(ScalarField, ScalarField)> {
    let m = *field.mesh();
    if m.nx() < 2 || m.nz() < 2 {
        return Err(Error::DegenerateMesh(format!("gradient needs at least 2x2 elements, got {}x{}", m.nx(), m.nz())));
    }
    let (hx, hz) = (m.hx(), m.hz());
    let v = field.values();
    let mut gx = vec![0.0; m.node_count()];
    let mut gz = vec![0.0; m.node_count()];
    for j in 0..=m.nz() {
        for i in 0..=m.nx() {
            let k = m.node(i, j);
            gx[k] = if i == 0 {
                (-3.0 * v[k] + 4.0 * v[k + 1] - v[k + 2]) / (2.0 * hx)
            } else if i == m.nx() {
                (3.0 * v[k] - 4.0 * v[k - 1] + v[k - 2]) / (2.0 * hx)
            } else {
                (v[k + 1] - v[k - 1]) / (2.0 * hx)
            };
            let row = m.row_len();
            gz[k] = if j == 0 {
                (-3.0 * v[k] + 4.0 * v[k + row] - v[k + 2 * row]) / (2.0 * hz)
            } else if j == m.nz() {
                (3.0 * v[k] - 4.0 * v[k - row] + v[k - 2 * row]) / (2.0 * hz)
            } else {
                (v[k + row] - v[k - row]) / (2.0 * hz)
            };
        }
    }
    Ok((ScalarField::new(m, gx)?, ScalarField::new(m, gz)?))
}
