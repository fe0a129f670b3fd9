use crate::error::{Error, Result};
use crate::grid_fem::{Rect, RectMesh, ScalarField};

/// Side of the rectangular domain a measurement point belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Bottom,
    Right,
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Bottom, Side::Right, Side::Top];

    pub fn letter(self) -> char {
        match self {
            Side::Left => 'L',
            Side::Bottom => 'B',
            Side::Right => 'R',
            Side::Top => 'T',
        }
    }

    pub fn from_letter(c: &str) -> Result<Self> {
        match c {
            "L" => Ok(Side::Left),
            "B" => Ok(Side::Bottom),
            "R" => Ok(Side::Right),
            "T" => Ok(Side::Top),
            other => Err(Error::Parse(format!("unknown side {other:?}"))),
        }
    }

    /// Vertical sides are parametrised by z, horizontal ones by x.
    pub fn is_vertical(self) -> bool {
        matches!(self, Side::Left | Side::Right)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementPoint {
    pub side: Side,
    pub x: f64,
    pub z: f64,
}

impl MeasurementPoint {
    /// Coordinate along the owning side.
    pub fn coord(&self) -> f64 {
        self.coord_on(self.side)
    }

    /// Coordinate along `side`; differs from [`Self::coord`] only at corners.
    pub fn coord_on(&self, side: Side) -> f64 {
        if side.is_vertical() {
            self.z
        } else {
            self.x
        }
    }
}

/// Detector positions on the boundary of the reconstruction domain.
///
/// Ordering: left side bottom to top, bottom side left to right without the
/// shared corner (these two form the primary set), then right side bottom to
/// top and top side left to right, each without the corners already listed.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementLayout {
    omega: Rect,
    vertical: usize,
    horizontal: usize,
    points: Vec<MeasurementPoint>,
}

impl MeasurementLayout {
    /// `vertical` points per vertical side and `horizontal` per horizontal side,
    /// corners included.
    pub fn new(omega: Rect, vertical: usize, horizontal: usize) -> Result<Self> {
        if vertical < 2 || horizontal < 2 {
            return Err(Error::Geometry(format!("need at least two points per side, got {vertical} and {horizontal}")));
        }
        let zs = |j: usize| omega.z_min + omega.height() * j as f64 / (vertical - 1) as f64;
        let xs = |i: usize| omega.x_min + omega.width() * i as f64 / (horizontal - 1) as f64;
        let mut points = Vec::with_capacity(2 * (vertical + horizontal) - 4);
        points.extend((0..vertical).map(|j| MeasurementPoint { side: Side::Left, x: omega.x_min, z: zs(j) }));
        points.extend((1..horizontal).map(|i| MeasurementPoint { side: Side::Bottom, x: xs(i), z: omega.z_min }));
        points.extend((1..vertical).map(|j| MeasurementPoint { side: Side::Right, x: omega.x_max, z: zs(j) }));
        points.extend((1..horizontal - 1).map(|i| MeasurementPoint { side: Side::Top, x: xs(i), z: omega.z_max }));
        Ok(Self { omega, vertical, horizontal, points })
    }

    pub fn omega(&self) -> &Rect {
        &self.omega
    }

    pub fn vertical(&self) -> usize {
        self.vertical
    }

    pub fn horizontal(&self) -> usize {
        self.horizontal
    }

    pub fn points(&self) -> &[MeasurementPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Size of the left-plus-bottom set.
    pub fn primary_len(&self) -> usize {
        self.vertical + self.horizontal - 1
    }

    /// Indices of every point lying on `side`, corners included, ordered by
    /// the coordinate along the side.
    pub fn side_indices(&self, side: Side) -> Vec<usize> {
        let (v, h) = (self.vertical, self.horizontal);
        let bottom_start = v;
        let right_start = v + h - 1;
        let top_start = right_start + v - 1;
        match side {
            Side::Left => (0..v).collect(),
            Side::Bottom => std::iter::once(0).chain(bottom_start..right_start).collect(),
            Side::Right => std::iter::once(right_start - 1).chain(right_start..top_start).collect(),
            Side::Top => std::iter::once(v - 1).chain(top_start..self.points.len()).chain(std::iter::once(top_start - 1)).collect(),
        }
    }

    /// Values of `field` at every point, interpolated geometrically where the
    /// surrounding nodes are positive.
    pub fn extract(&self, field: &ScalarField) -> Result<Vec<f64>> {
        let m = field.mesh();
        let covers = m.x_min() <= self.omega.x_min
            && m.x_max() >= self.omega.x_max
            && m.z_min() <= self.omega.z_min
            && m.z_max() >= self.omega.z_max;
        if !covers {
            return Err(Error::Geometry("measurement domain is not inside the field's mesh".into()));
        }
        self.points.iter().map(|p| field.interpolate_positive(p.x, p.z)).collect()
    }

    /// Dirichlet data for every boundary node of `mesh` (which must span the
    /// domain exactly), linearly interpolated along each side from `values`
    /// given at the full set of points.
    pub fn boundary_values(&self, values: &[f64], mesh: &RectMesh) -> Result<Vec<(usize, f64)>> {
        self.interpolate_sides(values, mesh)
    }

    /// [`Self::boundary_values`] for positive, exponentially varying data
    /// such as light intensities: the logarithm is interpolated, which keeps
    /// the sparse horizontal sampling from biasing the data upwards.
    pub fn boundary_values_positive(&self, values: &[f64], mesh: &RectMesh) -> Result<Vec<(usize, f64)>> {
        if let Some(k) = values.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::Domain(format!("value {} at point {k} is not positive", values[k])));
        }
        let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
        Ok(self.interpolate_sides(&logs, mesh)?.into_iter().map(|(n, v)| (n, v.exp())).collect())
    }

    fn interpolate_sides(&self, values: &[f64], mesh: &RectMesh) -> Result<Vec<(usize, f64)>> {
        if values.len() != self.points.len() {
            return Err(Error::MissingEdgeData(format!(
                "boundary interpolation needs all {} points, got {}",
                self.points.len(),
                values.len()
            )));
        }
        let tol = 1e-9 * (self.omega.width() + self.omega.height());
        let same = (mesh.x_min() - self.omega.x_min).abs() < tol
            && (mesh.x_max() - self.omega.x_max).abs() < tol
            && (mesh.z_min() - self.omega.z_min).abs() < tol
            && (mesh.z_max() - self.omega.z_max).abs() < tol;
        if !same {
            return Err(Error::Geometry("mesh does not span the measurement domain".into()));
        }
        let sides: Vec<(Vec<f64>, Vec<f64>)> = Side::ALL
            .iter()
            .map(|&side| {
                let idx = self.side_indices(side);
                let coords = idx.iter().map(|&k| self.points[k].coord_on(side)).collect();
                let vals = idx.iter().map(|&k| values[k]).collect();
                (coords, vals)
            })
            .collect();
        let mut out = Vec::new();
        for node in mesh.boundary_nodes() {
            let (i, j) = mesh.node_ij(node);
            let (x, z) = mesh.coords(node);
            // corners take the value of their vertical side
            let (side, t) = if i == 0 {
                (0, z)
            } else if i == mesh.nx() {
                (2, z)
            } else if j == 0 {
                (1, x)
            } else {
                (3, x)
            };
            let (coords, vals) = &sides[side];
            out.push((node, interp_sorted(coords, vals, t)));
        }
        Ok(out)
    }
}

/// Piecewise-linear interpolation on increasing abscissae, clamped at the ends.
pub fn interp_sorted(xs: &[f64], ys: &[f64], t: f64) -> f64 {
    let n = xs.len();
    if t <= xs[0] {
        return ys[0];
    }
    if t >= xs[n - 1] {
        return ys[n - 1];
    }
    let k = xs.partition_point(|&x| x <= t).clamp(1, n - 1);
    let w = (t - xs[k - 1]) / (xs[k] - xs[k - 1]);
    ys[k - 1] + w * (ys[k] - ys[k - 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout() -> MeasurementLayout {
        MeasurementLayout::new(Rect::new(5.0, 15.0, 5.0, 10.0).unwrap(), 65, 31).unwrap()
    }

    #[test]
    fn point_counts() {
        let l = layout();
        assert_eq!(l.primary_len(), 95);
        assert_eq!(l.len(), 188);
        assert_eq!(l.points()[64], MeasurementPoint { side: Side::Left, x: 5.0, z: 10.0 });
        assert_eq!(l.points()[65].side, Side::Bottom);
        assert!((l.points()[65].x - (5.0 + 1.0 / 3.0)).abs() < 1e-14);
    }

    #[test]
    fn sides_have_full_length_and_are_sorted() {
        let l = layout();
        for side in Side::ALL {
            let idx = l.side_indices(side);
            let expected = if side.is_vertical() { 65 } else { 31 };
            assert_eq!(idx.len(), expected, "{side:?}");
            let c: Vec<f64> = idx.iter().map(|&k| l.points()[k].coord_on(side)).collect();
            assert!(c.windows(2).all(|w| w[1] > w[0]), "{side:?}");
        }
    }

    #[test]
    fn every_point_listed_once() {
        let l = layout();
        let mut all: Vec<(i64, i64)> =
            l.points().iter().map(|p| ((p.x * 1e6).round() as i64, (p.z * 1e6).round() as i64)).collect();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 188);
    }

    #[test]
    fn boundary_values_of_linear_data_are_exact() {
        let l = layout();
        let mesh = RectMesh::new(5.0, 15.0, 5.0, 10.0, 12, 6).unwrap();
        let f = |x: f64, z: f64| 2.0 * x - 3.0 * z + 1.0;
        let data: Vec<f64> = l.points().iter().map(|p| f(p.x, p.z)).collect();
        for (node, v) in l.boundary_values(&data, &mesh).unwrap() {
            let (x, z) = mesh.coords(node);
            assert!((v - f(x, z)).abs() < 1e-12, "({x}, {z})");
        }
    }

    #[test]
    fn interpolation_is_linear_exact() {
        let xs = [0.0, 1.0, 3.0];
        let ys = [1.0, 2.0, 4.0];
        assert_eq!(interp_sorted(&xs, &ys, 2.0), 3.0);
        assert_eq!(interp_sorted(&xs, &ys, -1.0), 1.0);
        assert_eq!(interp_sorted(&xs, &ys, 3.0), 4.0);
    }
}
