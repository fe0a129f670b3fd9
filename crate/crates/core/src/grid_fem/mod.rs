//! Finite-element infrastructure on uniform rectangular meshes.

mod assembly;
mod bessel;
mod field;
mod mesh;
mod rect;
pub mod sparse;

pub use assembly::{
    assemble_elliptic, gradient, mass_times, point_source_load, solve, solve_iterative, EllipticProblem,
    FactoredSystem, Load, Quadrature, RobinSpec, SparseSystem, SOLVE_TOLERANCE,
};
pub use bessel::{bessel_k0, bessel_k1};
pub use field::ScalarField;
pub(crate) use field::{fmt17, parse_f64, parse_usize};
pub use mesh::{BoundaryTag, CellLocation, RectMesh};
pub use rect::Rect;

/// Build a uniform mesh; thin alias for [`RectMesh::new`].
pub fn build_mesh(x_min: f64, x_max: f64, z_min: f64, z_max: f64, nx: usize, nz: usize) -> crate::Result<RectMesh> {
    RectMesh::new(x_min, x_max, z_min, z_max, nx, nz)
}
