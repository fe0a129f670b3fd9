use bitflags::bitflags;

use crate::error::{Error, Result};

bitflags! {
    /// Sides of the rectangle a node lies on. Corners carry two flags.
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
    pub struct BoundaryTag: u8 {
        const LEFT = 0b0001;
        const RIGHT = 0b0010;
        const BOTTOM = 0b0100;
        const TOP = 0b1000;
    }
}

/// Uniform tensor-product mesh of bilinear quadrilaterals on a rectangle.
///
/// Nodes are numbered row-major with `z` outer and `x` inner, so node
/// `(i, j)` has index `j * (nx + 1) + i` and sits at
/// `(x_min + i * hx, z_min + j * hz)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectMesh {
    x_min: f64,
    x_max: f64,
    z_min: f64,
    z_max: f64,
    nx: usize,
    nz: usize,
}

/// Location of a point inside an element, with local coordinates in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellLocation {
    pub i: usize,
    pub j: usize,
    pub tx: f64,
    pub tz: f64,
}

impl RectMesh {
    pub fn new(x_min: f64, x_max: f64, z_min: f64, z_max: f64, nx: usize, nz: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite() && z_min.is_finite() && z_max.is_finite()) {
            return Err(Error::InvalidExtent("extents must be finite".into()));
        }
        if x_min >= x_max {
            return Err(Error::InvalidExtent(format!("x_min {x_min} >= x_max {x_max}")));
        }
        if z_min >= z_max {
            return Err(Error::InvalidExtent(format!("z_min {z_min} >= z_max {z_max}")));
        }
        if nx == 0 || nz == 0 {
            return Err(Error::InvalidExtent(format!("element counts must be >= 1, got {nx}x{nz}")));
        }
        Ok(Self { x_min, x_max, z_min, z_max, nx, nz })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }
    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    pub fn z_min(&self) -> f64 {
        self.z_min
    }
    pub fn z_max(&self) -> f64 {
        self.z_max
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn nz(&self) -> usize {
        self.nz
    }
    pub fn hx(&self) -> f64 {
        (self.x_max - self.x_min) / self.nx as f64
    }
    pub fn hz(&self) -> f64 {
        (self.z_max - self.z_min) / self.nz as f64
    }

    /// Nodes per row (along x).
    pub fn row_len(&self) -> usize {
        self.nx + 1
    }

    pub fn node_count(&self) -> usize {
        (self.nx + 1) * (self.nz + 1)
    }

    pub fn element_count(&self) -> usize {
        self.nx * self.nz
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    #[inline]
    pub fn node_ij(&self, node: usize) -> (usize, usize) {
        (node % (self.nx + 1), node / (self.nx + 1))
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        if i == self.nx {
            self.x_max
        } else {
            self.x_min + i as f64 * self.hx()
        }
    }

    #[inline]
    pub fn z(&self, j: usize) -> f64 {
        if j == self.nz {
            self.z_max
        } else {
            self.z_min + j as f64 * self.hz()
        }
    }

    pub fn coords(&self, node: usize) -> (f64, f64) {
        let (i, j) = self.node_ij(node);
        (self.x(i), self.z(j))
    }

    pub fn tag(&self, node: usize) -> BoundaryTag {
        let (i, j) = self.node_ij(node);
        let mut tag = BoundaryTag::empty();
        if i == 0 {
            tag |= BoundaryTag::LEFT;
        }
        if i == self.nx {
            tag |= BoundaryTag::RIGHT;
        }
        if j == 0 {
            tag |= BoundaryTag::BOTTOM;
        }
        if j == self.nz {
            tag |= BoundaryTag::TOP;
        }
        tag
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        !self.tag(node).is_empty()
    }

    /// Boundary node indices in increasing index order.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&n| self.is_boundary(n)).collect()
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&n| !self.is_boundary(n)).collect()
    }

    /// Global node indices of element `(ei, ej)` in counter-clockwise order
    /// starting at the lower-left corner.
    #[inline]
    pub fn element_nodes(&self, ei: usize, ej: usize) -> [usize; 4] {
        let n0 = self.node(ei, ej);
        let row = self.nx + 1;
        [n0, n0 + 1, n0 + row + 1, n0 + row]
    }

    pub fn contains(&self, x: f64, z: f64) -> bool {
        let tol = 1e-12 * (self.x_max - self.x_min).max(self.z_max - self.z_min);
        x >= self.x_min - tol && x <= self.x_max + tol && z >= self.z_min - tol && z <= self.z_max + tol
    }

    /// Element containing `(x, z)`; points on shared edges go to the upper/right cell
    /// except on the last row/column.
    pub fn locate(&self, x: f64, z: f64) -> Result<CellLocation> {
        if !self.contains(x, z) {
            return Err(Error::OutOfDomain { x, z });
        }
        let (i, tx) = locate_1d(x, self.x_min, self.hx(), self.nx);
        let (j, tz) = locate_1d(z, self.z_min, self.hz(), self.nz);
        Ok(CellLocation { i, j, tx, tz })
    }

    /// Node nearest to `(x, z)`; ties resolve toward the lower index.
    pub fn nearest_node(&self, x: f64, z: f64) -> Result<usize> {
        if !self.contains(x, z) {
            return Err(Error::OutOfDomain { x, z });
        }
        let i = (((x - self.x_min) / self.hx()).round().max(0.0) as usize).min(self.nx);
        let j = (((z - self.z_min) / self.hz()).round().max(0.0) as usize).min(self.nz);
        Ok(self.node(i, j))
    }

    /// True when both meshes describe the same grid.
    pub fn same_grid(&self, other: &RectMesh) -> bool {
        self == other
    }
}

fn locate_1d(x: f64, min: f64, h: f64, n: usize) -> (usize, f64) {
    let t = (x - min) / h;
    let mut cell = t.floor();
    if cell < 0.0 {
        cell = 0.0;
    }
    let mut cell = cell as usize;
    if cell >= n {
        cell = n - 1;
    }
    let local = (t - cell as f64).clamp(0.0, 1.0);
    (cell, local)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_mesh_dimensions() {
        let mesh = RectMesh::new(0.0, 20.0, 0.0, 15.0, 130, 93).unwrap();
        assert_eq!(mesh.node_count(), 12314);
        assert!((mesh.hx() - 2.0 / 13.0).abs() < 1e-15);
    }

    #[test]
    fn single_element_corners_are_dual_tagged() {
        let mesh = RectMesh::new(0.0, 1.0, 0.0, 1.0, 1, 1).unwrap();
        assert_eq!(mesh.node_count(), 4);
        assert_eq!(mesh.boundary_nodes().len(), 4);
        for n in 0..4 {
            assert_eq!(mesh.tag(n).bits().count_ones(), 2);
        }
    }

    #[test]
    fn perimeter_count() {
        let mesh = RectMesh::new(5.0, 15.0, 5.0, 10.0, 10, 5).unwrap();
        assert_eq!(mesh.boundary_nodes().len(), 30);
        let corners = mesh.boundary_nodes().iter().filter(|&&n| mesh.tag(n).bits().count_ones() == 2).count();
        assert_eq!(corners, 4);
    }

    #[test]
    fn invalid_extents_rejected() {
        assert!(matches!(RectMesh::new(1.0, 1.0, 0.0, 1.0, 2, 2), Err(Error::InvalidExtent(_))));
        assert!(matches!(RectMesh::new(0.0, 1.0, 0.0, 1.0, 0, 2), Err(Error::InvalidExtent(_))));
        assert!(matches!(RectMesh::new(0.0, 1.0, 2.0, 1.0, 2, 2), Err(Error::InvalidExtent(_))));
    }

    #[test]
    fn node_coordinates() {
        let mesh = RectMesh::new(5.0, 15.0, 5.0, 10.0, 10, 5).unwrap();
        assert_eq!(mesh.coords(mesh.node(3, 2)), (8.0, 7.0));
        assert_eq!(mesh.coords(mesh.node_count() - 1), (15.0, 10.0));
        let loc = mesh.locate(8.5, 7.25).unwrap();
        assert_eq!((loc.i, loc.j), (3, 2));
        assert!((loc.tx - 0.5).abs() < 1e-12 && (loc.tz - 0.25).abs() < 1e-12);
        assert!(mesh.locate(4.0, 7.0).is_err());
    }
}
