use std::fmt::Write as _;
use std::path::Path;

use super::mesh::RectMesh;
use crate::error::{Error, Result};

const GAUSS: f64 = 0.577_350_269_189_625_8;

/// One value per node of a [`RectMesh`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    mesh: RectMesh,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(mesh: RectMesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.node_count() {
            return Err(Error::MeshMismatch(format!(
                "{} values for a mesh with {} nodes",
                values.len(),
                mesh.node_count()
            )));
        }
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node });
        }
        Ok(Self { mesh, values })
    }

    pub fn constant(mesh: RectMesh, value: f64) -> Self {
        assert!(value.is_finite(), "constant field value must be finite");
        Self { mesh, values: vec![value; mesh.node_count()] }
    }

    pub fn zeros(mesh: RectMesh) -> Self {
        Self::constant(mesh, 0.0)
    }

    pub fn from_fn(mesh: RectMesh, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = (0..mesh.node_count())
            .map(|n| {
                let (x, z) = mesh.coords(n);
                f(x, z)
            })
            .collect();
        Self::new(mesh, values)
    }

    pub fn mesh(&self) -> &RectMesh {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.mesh.node(i, j)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.mesh, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_mesh(other)?;
        Self::new(self.mesh, self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect())
    }

    pub fn check_same_mesh(&self, other: &ScalarField) -> Result<()> {
        if self.mesh.same_grid(&other.mesh) {
            Ok(())
        } else {
            Err(Error::MeshMismatch(format!("{:?} vs {:?}", self.mesh, other.mesh)))
        }
    }

    /// Bilinear interpolation at an arbitrary point inside the mesh.
    pub fn interpolate(&self, x: f64, z: f64) -> Result<f64> {
        let loc = self.mesh.locate(x, z)?;
        let [n0, n1, n2, n3] = self.mesh.element_nodes(loc.i, loc.j);
        let (tx, tz) = (loc.tx, loc.tz);
        Ok(self.values[n0] * (1.0 - tx) * (1.0 - tz)
            + self.values[n1] * tx * (1.0 - tz)
            + self.values[n2] * tx * tz
            + self.values[n3] * (1.0 - tx) * tz)
    }

    /// Bilinear interpolation of `ln` values, exponentiated: exact for
    /// exponentials along the grid axes. Falls back to [`Self::interpolate`]
    /// when a surrounding node is not positive.
    pub fn interpolate_positive(&self, x: f64, z: f64) -> Result<f64> {
        let loc = self.mesh.locate(x, z)?;
        let nodes = self.mesh.element_nodes(loc.i, loc.j);
        let v = nodes.map(|n| self.values[n]);
        if v.iter().any(|&v| !(v > 0.0)) {
            return self.interpolate(x, z);
        }
        let (tx, tz) = (loc.tx, loc.tz);
        Ok((v[0].ln() * (1.0 - tx) * (1.0 - tz)
            + v[1].ln() * tx * (1.0 - tz)
            + v[2].ln() * tx * tz
            + v[3].ln() * (1.0 - tx) * tz)
            .exp())
    }

    /// Resample onto another mesh whose extent lies inside this one.
    pub fn resample(&self, target: &RectMesh) -> Result<ScalarField> {
        let values = (0..target.node_count())
            .map(|n| {
                let (x, z) = target.coords(n);
                self.interpolate(x, z)
            })
            .collect::<Result<Vec<_>>>()?;
        ScalarField::new(*target, values)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// L2 norm of the bilinear interpolant, by 2x2 Gauss quadrature (exact).
    pub fn l2_norm(&self) -> f64 {
        self.weighted_square_integral().sqrt()
    }

    fn weighted_square_integral(&self) -> f64 {
        let mesh = &self.mesh;
        let w = mesh.hx() * mesh.hz() / 4.0;
        let pts = [0.5 * (1.0 - GAUSS), 0.5 * (1.0 + GAUSS)];
        let mut total = 0.0;
        for ej in 0..mesh.nz() {
            for ei in 0..mesh.nx() {
                let nodes = mesh.element_nodes(ei, ej);
                let v = nodes.map(|n| self.values[n]);
                for &tz in &pts {
                    for &tx in &pts {
                        let f = v[0] * (1.0 - tx) * (1.0 - tz) + v[1] * tx * (1.0 - tz) + v[2] * tx * tz + v[3] * (1.0 - tx) * tz;
                        total += w * f * f;
                    }
                }
            }
        }
        total
    }

    /// Integral of the bilinear interpolant over the mesh.
    pub fn integral(&self) -> f64 {
        let mesh = &self.mesh;
        let w = mesh.hx() * mesh.hz() / 4.0;
        let mut total = 0.0;
        for ej in 0..mesh.nz() {
            for ei in 0..mesh.nx() {
                total += w * mesh.element_nodes(ei, ej).iter().map(|&n| self.values[n]).sum::<f64>();
            }
        }
        total
    }

    /// Text serialization: header `nx nz x_min x_max z_min z_max`, then one value per line.
    pub fn to_text(&self) -> String {
        let m = &self.mesh;
        let mut out = String::with_capacity(self.values.len() * 26 + 64);
        writeln!(out, "{} {} {} {} {} {}", m.nx(), m.nz(), fmt17(m.x_min()), fmt17(m.x_max()), fmt17(m.z_min()), fmt17(m.z_max()))
            .unwrap();
        for v in &self.values {
            writeln!(out, "{}", fmt17(*v)).unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty field file".into()))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 6 {
            return Err(Error::Parse(format!("field header needs 6 entries, got {}", parts.len())));
        }
        let nx = parse_usize(parts[0])?;
        let nz = parse_usize(parts[1])?;
        let ext: Vec<f64> = parts[2..].iter().map(|p| parse_f64(p)).collect::<Result<_>>()?;
        let mesh = RectMesh::new(ext[0], ext[1], ext[2], ext[3], nx, nz)?;
        let values = lines.map(|l| parse_f64(l.trim())).collect::<Result<Vec<_>>>()?;
        ScalarField::new(mesh, values)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

/// Shortest round-trip decimal; always at least 17 significant digits of precision.
pub(crate) fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn parse_f64(s: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|e| Error::Parse(format!("bad number {s:?}: {e}")))
}

pub(crate) fn parse_usize(s: &str) -> Result<usize> {
    s.parse::<usize>().map_err(|e| Error::Parse(format!("bad integer {s:?}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mesh() -> RectMesh {
        RectMesh::new(5.0, 15.0, 5.0, 10.0, 10, 5).unwrap()
    }

    #[test]
    fn rejects_wrong_length_and_nan() {
        assert!(ScalarField::new(mesh(), vec![0.0; 3]).is_err());
        let mut v = vec![0.0; mesh().node_count()];
        v[7] = f64::NAN;
        assert!(matches!(ScalarField::new(mesh(), v), Err(Error::NonFinite { node: 7 })));
    }

    #[test]
    fn interpolation_exact_for_bilinear() {
        let f = ScalarField::from_fn(mesh(), |x, z| 1.0 + 2.0 * x - z + 0.5 * x * z).unwrap();
        let v = f.interpolate(7.3, 8.9).unwrap();
        assert!((v - (1.0 + 14.6 - 8.9 + 0.5 * 7.3 * 8.9)).abs() < 1e-12);
    }

    #[test]
    fn l2_norm_of_constant() {
        let f = ScalarField::constant(mesh(), 2.0);
        assert!((f.l2_norm() - (4.0_f64 * 50.0).sqrt()).abs() < 1e-12);
        assert!((f.integral() - 100.0).abs() < 1e-12);
    }

    #[test]
    fn text_round_trip_is_exact() {
        let f = ScalarField::from_fn(mesh(), |x, z| (x * 0.37).sin() * z.exp() / 3.0).unwrap();
        let back = ScalarField::from_text(&f.to_text()).unwrap();
        assert_eq!(f, back);
        assert!(f.to_text().starts_with("10 5 "));
    }
}
