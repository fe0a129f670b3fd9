//! Coefficient recovery from the weak form `∫ a u η = −∫ ∇u·∇η`.
//!
//! The product `a u` is represented by quadratic B-splines with open knot
//! vectors on a coarse grid over the domain. Only splines vanishing on the
//! boundary are used as test functions, so the Gram matrix is a tensor
//! product of two small 1D matrices and is inverted direction by direction.

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Error, Result};
use crate::grid_fem::{RectMesh, ScalarField};

const GAUSS3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

/// Uniform quadratic B-splines with an open knot vector on `[lo, hi]`.
#[derive(Debug, Clone)]
struct Spline1d {
    lo: f64,
    width: f64,
    elements: usize,
}

impl Spline1d {
    fn new(lo: f64, hi: f64, elements: usize) -> Self {
        Self { lo, width: (hi - lo) / elements as f64, elements }
    }

    fn count(&self) -> usize {
        self.elements + 2
    }

    /// Knot span containing `x` and the three nonzero splines there (indices
    /// `span..span + 3`) with their derivatives.
    fn eval(&self, x: f64) -> (usize, [f64; 3], [f64; 3]) {
        let t = (x - self.lo) / self.width;
        let span = (t.floor().max(0.0) as usize).min(self.elements - 1);
        let knot = |i: isize| -> f64 { (i - 2).clamp(0, self.elements as isize) as f64 };
        let s = span as isize + 2;
        // Cox–de Boor in knot units on [knot(s), knot(s + 1)]
        let d = |a: f64, b: f64| if b - a > 0.0 { 1.0 / (b - a) } else { 0.0 };
        let w10 = d(knot(s), knot(s + 1));
        let lin = [(knot(s + 1) - t) * w10, (t - knot(s)) * w10];
        // degree 2: functions s-2, s-1, s
        let a0 = d(knot(s - 1), knot(s + 1));
        let a1 = d(knot(s), knot(s + 2));
        let q0 = (knot(s + 1) - t) * a0 * lin[0];
        let q1 = (t - knot(s - 1)) * a0 * lin[0] + (knot(s + 2) - t) * a1 * lin[1];
        let q2 = (t - knot(s)) * a1 * lin[1];
        // derivative of a degree-2 spline from the degree-1 ones
        let dq0 = -2.0 * a0 * lin[0];
        let dq1 = 2.0 * a0 * lin[0] - 2.0 * a1 * lin[1];
        let dq2 = 2.0 * a1 * lin[1];
        let inv = 1.0 / self.width;
        (span, [q0, q1, q2], [dq0 * inv, dq1 * inv, dq2 * inv])
    }

    /// Gram matrix `∫ N_i N_j` of the splines vanishing at both ends.
    fn interior_gram(&self) -> DMatrix<f64> {
        let n = self.elements;
        let mut g = DMatrix::zeros(n, n);
        for e in 0..self.elements {
            for &(p, w) in &GAUSS3 {
                let x = self.lo + self.width * (e as f64 + 0.5 * (1.0 + p));
                let (span, v, _) = self.eval(x);
                for a in 0..3 {
                    for b in 0..3 {
                        let (ia, ib) = (span + a, span + b);
                        if (1..=n).contains(&ia) && (1..=n).contains(&ib) {
                            g[(ia - 1, ib - 1)] += 0.5 * self.width * w * v[a] * v[b];
                        }
                    }
                }
            }
        }
        g
    }
}

/// Options of a single recovery.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryOptions {
    /// Lower bound applied to the recovered coefficient.
    pub floor: f64,
    /// When set, the splines represent `(a − anchor) u` instead of `a u`, so
    /// the coefficient tends to `anchor` at the boundary rather than to zero.
    pub anchor: Option<f64>,
}

/// Result of one recovery.
#[derive(Debug, Clone)]
pub struct Recovered {
    pub coefficient: ScalarField,
    /// Nodes raised to the floor.
    pub floored: usize,
}

/// Spline space and precomputed factorizations used by [`RecoveryBasis::recover`].
#[derive(Debug, Clone)]
pub struct RecoveryBasis {
    mesh: RectMesh,
    sx: Spline1d,
    sz: Spline1d,
    gx: Cholesky<f64, Dyn>,
    gz: Cholesky<f64, Dyn>,
}

impl RecoveryBasis {
    /// Splines on `elements_x × elements_z` coarse elements over `mesh`. The
    /// fine mesh must refine the coarse one so every quadrature cell lies in
    /// a single knot span.
    pub fn new(mesh: RectMesh, elements_x: usize, elements_z: usize) -> Result<Self> {
        if elements_x == 0 || elements_z == 0 || !mesh.nx().is_multiple_of(elements_x) || !mesh.nz().is_multiple_of(elements_z) {
            return Err(Error::Config(format!(
                "a {}x{} mesh does not refine {elements_x}x{elements_z} recovery elements",
                mesh.nx(),
                mesh.nz()
            )));
        }
        let sx = Spline1d::new(mesh.x_min(), mesh.x_max(), elements_x);
        let sz = Spline1d::new(mesh.z_min(), mesh.z_max(), elements_z);
        let gx = Cholesky::new(sx.interior_gram()).ok_or(Error::RankDeficient("x Gram matrix".into()))?;
        let gz = Cholesky::new(sz.interior_gram()).ok_or(Error::RankDeficient("z Gram matrix".into()))?;
        Ok(Self { mesh, sx, sz, gx, gz })
    }

    pub fn mesh(&self) -> &RectMesh {
        &self.mesh
    }

    /// Number of test functions vanishing on the boundary.
    pub fn interior_dofs(&self) -> usize {
        self.sx.elements * self.sz.elements
    }

    /// Total number of splines, boundary ones included.
    pub fn total_functions(&self) -> usize {
        self.sx.count() * self.sz.count()
    }

    /// Weak-form load `−∫ ∇u·∇η − anchor ∫ u η` for every interior spline,
    /// as an `elements_x × elements_z` matrix.
    fn load(&self, u: &ScalarField, anchor: f64) -> DMatrix<f64> {
        let m = &self.mesh;
        let (hx, hz) = (m.hx(), m.hz());
        let (nx, nz) = (self.sx.elements, self.sz.elements);
        let mut r = DMatrix::zeros(nx, nz);
        let vals = u.values();
        for ej in 0..m.nz() {
            for ei in 0..m.nx() {
                let nodes = m.element_nodes(ei, ej);
                let c = nodes.map(|k| vals[k]);
                for &(px, wx) in &GAUSS3 {
                    let tx = 0.5 * (1.0 + px);
                    let (bx, vx, dx) = self.sx.eval(m.x(ei) + tx * hx);
                    for &(pz, wz) in &GAUSS3 {
                        let tz = 0.5 * (1.0 + pz);
                        let (bz, vz, dz) = self.sz.eval(m.z(ej) + tz * hz);
                        let w = 0.25 * wx * wz * hx * hz;
                        let uq = c[0] * (1.0 - tx) * (1.0 - tz) + c[1] * tx * (1.0 - tz) + c[2] * tx * tz + c[3] * (1.0 - tx) * tz;
                        let ux = ((c[1] - c[0]) * (1.0 - tz) + (c[2] - c[3]) * tz) / hx;
                        let uz = ((c[3] - c[0]) * (1.0 - tx) + (c[2] - c[1]) * tx) / hz;
                        for a in 0..3 {
                            let ia = bx + a;
                            if ia == 0 || ia > nx {
                                continue;
                            }
                            for b in 0..3 {
                                let ib = bz + b;
                                if ib == 0 || ib > nz {
                                    continue;
                                }
                                let grad = ux * dx[a] * vz[b] + uz * vx[a] * dz[b];
                                r[(ia - 1, ib - 1)] -= w * (grad + anchor * uq * vx[a] * vz[b]);
                            }
                        }
                    }
                }
            }
        }
        r
    }

    /// Recover `a` from a positive field `u` on the basis mesh.
    pub fn recover(&self, u: &ScalarField, options: RecoveryOptions) -> Result<Recovered> {
        if !u.mesh().same_grid(&self.mesh) {
            return Err(Error::MeshMismatch("recovery input lives on a different mesh".into()));
        }
        if let Some(node) = u.values().iter().position(|v| !(*v > 0.0)) {
            return Err(Error::Domain(format!("recovery needs a positive field, node {node} is not")));
        }
        let anchor = options.anchor.unwrap_or(0.0);
        let r = self.load(u, anchor);
        // α = Gx⁻¹ R Gz⁻¹
        let left = self.gx.solve(&r);
        let alpha = self.gz.solve(&left.transpose()).transpose();
        let m = &self.mesh;
        let xs: Vec<(usize, [f64; 3])> = (0..=m.nx()).map(|i| { let (s, v, _) = self.sx.eval(m.x(i)); (s, v) }).collect();
        let zs: Vec<(usize, [f64; 3])> = (0..=m.nz()).map(|j| { let (s, v, _) = self.sz.eval(m.z(j)); (s, v) }).collect();
        let (nx, nz) = (self.sx.elements, self.sz.elements);
        let mut floored = 0;
        let mut values = Vec::with_capacity(m.node_count());
        for (j, (bz, vz)) in zs.iter().enumerate() {
            for (i, (bx, vx)) in xs.iter().enumerate() {
                let mut w = 0.0;
                for a in 0..3 {
                    let ia = bx + a;
                    if ia == 0 || ia > nx {
                        continue;
                    }
                    for b in 0..3 {
                        let ib = bz + b;
                        if ib == 0 || ib > nz {
                            continue;
                        }
                        w += alpha[(ia - 1, ib - 1)] * vx[a] * vz[b];
                    }
                }
                let mut a = anchor + w / u.values()[m.node(i, j)];
                if a < options.floor {
                    a = options.floor;
                    floored += 1;
                }
                values.push(a);
            }
        }
        Ok(Recovered { coefficient: ScalarField::new(*m, values)?, floored })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_of_unity_and_derivative_sum() {
        let s = Spline1d::new(5.0, 15.0, 30);
        for k in 0..=300 {
            let x = 5.0 + 10.0 * k as f64 / 300.0;
            let (span, v, d) = s.eval(x);
            assert!(span + 2 < s.count());
            assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-14, "x = {x}");
            assert!(d.iter().sum::<f64>().abs() < 1e-12);
            assert!(v.iter().all(|&b| b >= -1e-15));
        }
    }

    #[test]
    fn derivative_matches_difference() {
        let s = Spline1d::new(0.0, 1.0, 5);
        for &x in &[0.05, 0.31, 0.5, 0.77, 0.93] {
            let (span, _, d) = s.eval(x);
            let (sp, vp, _) = s.eval(x + 1e-7);
            let (sm, vm, _) = s.eval(x - 1e-7);
            assert_eq!((span, span), (sp, sm));
            for a in 0..3 {
                assert!(((vp[a] - vm[a]) / 2e-7 - d[a]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn default_basis_has_450_interior_functions() {
        let mesh = RectMesh::new(5.0, 15.0, 5.0, 10.0, 60, 30).unwrap();
        let b = RecoveryBasis::new(mesh, 30, 15).unwrap();
        assert_eq!(b.interior_dofs(), 450);
        assert_eq!(b.total_functions(), 32 * 17);
        assert!(RecoveryBasis::new(mesh, 7, 15).is_err());
    }

    #[test]
    fn constant_field_gives_zero() {
        let mesh = RectMesh::new(5.0, 15.0, 5.0, 10.0, 60, 30).unwrap();
        let b = RecoveryBasis::new(mesh, 30, 15).unwrap();
        let u = ScalarField::constant(mesh, 1.0);
        let r = b.recover(&u, RecoveryOptions { floor: f64::NEG_INFINITY, anchor: None }).unwrap();
        assert!(r.coefficient.max_abs() < 1e-12);
    }

    #[test]
    fn exponential_gives_one_inside() {
        // Δu = u, so a = 1
        let mesh = RectMesh::new(5.0, 15.0, 5.0, 10.0, 120, 60).unwrap();
        let b = RecoveryBasis::new(mesh, 30, 15).unwrap();
        let u = ScalarField::from_fn(mesh, |x, _| (x - 10.0).exp()).unwrap();
        let r = b.recover(&u, RecoveryOptions { floor: f64::NEG_INFINITY, anchor: Some(1.0) }).unwrap();
        for n in mesh.interior_nodes() {
            assert!((r.coefficient.values()[n] - 1.0).abs() < 0.05, "node {n}: {}", r.coefficient.values()[n]);
        }
    }

    #[test]
    fn anchoring_removes_the_boundary_layer() {
        let mesh = RectMesh::new(5.0, 15.0, 5.0, 10.0, 120, 60).unwrap();
        let b = RecoveryBasis::new(mesh, 30, 15).unwrap();
        let u = ScalarField::from_fn(mesh, |x, _| (x - 10.0).exp()).unwrap();
        let worst = |anchor| {
            let r = b.recover(&u, RecoveryOptions { floor: f64::NEG_INFINITY, anchor }).unwrap();
            mesh.interior_nodes().into_iter().map(|n| (r.coefficient.values()[n] - 1.0).abs()).fold(0.0, f64::max)
        };
        let (plain, anchored) = (worst(None), worst(Some(1.0)));
        assert!(anchored < 0.05 && plain > 5.0 * anchored);
    }
}
