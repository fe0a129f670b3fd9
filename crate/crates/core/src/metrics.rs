//! Relative error metrics over an evaluation region and the consecutive
//! difference used as a stopping criterion.

use std::fmt;

use crate::error::{Error, Result};
use crate::grid_fem::{fmt17, Rect, ScalarField};

/// Relative errors of an estimate against the truth over a region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub rmse: f64,
    pub mae: f64,
    pub me: f64,
    /// Number of grid points inside the region.
    pub points: usize,
    pub region: Rect,
}

impl MetricsReport {
    pub fn to_text(&self) -> String {
        format!("RMSE {}\nMAE {}\nME {}\n", fmt17(self.rmse), fmt17(self.mae), fmt17(self.me))
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RMSE {:.6}  MAE {:.6}  ME {:.6}  ({} points)", self.rmse, self.mae, self.me, self.points)
    }
}

/// RMSE, MAE and ME of `estimate` against `truth` over the grid points lying
/// strictly inside `region`, all normalised by `max |truth|` over the region.
/// ME is positive when the estimate is low.
pub fn rmse_mae_me(truth: &ScalarField, estimate: &ScalarField, region: &Rect) -> Result<MetricsReport> {
    truth.check_same_mesh(estimate)?;
    let mesh = truth.mesh();
    let (mut sq, mut abs, mut signed, mut peak) = (0.0, 0.0, 0.0, 0.0f64);
    let mut points = 0usize;
    for node in 0..mesh.node_count() {
        let (x, z) = mesh.coords(node);
        if !region.contains_strictly(x, z) {
            continue;
        }
        let d = truth.values()[node] - estimate.values()[node];
        sq += d * d;
        abs += d.abs();
        signed += d;
        peak = peak.max(truth.values()[node].abs());
        points += 1;
    }
    if points == 0 {
        return Err(Error::EmptyRegion);
    }
    if peak == 0.0 {
        return Err(Error::ZeroDenominator("truth vanishes over the region".into()));
    }
    let n = points as f64;
    Ok(MetricsReport {
        rmse: sq.sqrt() / (n.sqrt() * peak),
        mae: abs / (n * peak),
        me: signed / (n * peak),
        points,
        region: *region,
    })
}

/// `√Σ(current − previous)² / (√N · max|previous|)` over all grid points.
pub fn consecutive_diff(current: &ScalarField, previous: &ScalarField) -> Result<f64> {
    current.check_same_mesh(previous)?;
    let peak = previous.max_abs();
    if peak == 0.0 {
        return Err(Error::ZeroDenominator("previous iterate vanishes".into()));
    }
    let sq: f64 = current.values().iter().zip(previous.values()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sq.sqrt() / ((current.len() as f64).sqrt() * peak))
}

/// A local maximum of a field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub x: f64,
    pub z: f64,
    pub value: f64,
}

/// Local maxima over the grid points strictly inside `region`, largest
/// first. A point qualifies when no 8-neighbour inside the region exceeds
/// it; ties go to the neighbour stored first, so a plateau yields a single
/// peak.
pub fn local_maxima(field: &ScalarField, region: &Rect) -> Vec<Peak> {
    let mesh = field.mesh();
    let (nx, nz) = (mesh.nx() as isize, mesh.nz() as isize);
    let mut peaks = Vec::new();
    for node in 0..mesh.node_count() {
        let (x, z) = mesh.coords(node);
        if !region.contains_strictly(x, z) {
            continue;
        }
        let (i, j) = mesh.node_ij(node);
        let v = field.values()[node];
        let mut is_peak = true;
        'scan: for dj in -1isize..=1 {
            for di in -1isize..=1 {
                let (ni, nj) = (i as isize + di, j as isize + dj);
                if (di, dj) == (0, 0) || ni < 0 || nj < 0 || ni > nx || nj > nz {
                    continue;
                }
                let other = mesh.node(ni as usize, nj as usize);
                let (ox, oz) = mesh.coords(other);
                if !region.contains_strictly(ox, oz) {
                    continue;
                }
                let w = field.values()[other];
                if w > v || (w == v && other < node) {
                    is_peak = false;
                    break 'scan;
                }
            }
        }
        if is_peak {
            peaks.push(Peak { x, z, value: v });
        }
    }
    peaks.sort_by(|a, b| b.value.total_cmp(&a.value));
    peaks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_fem::RectMesh;

    fn two_points(truth: [f64; 2], est: [f64; 2]) -> (ScalarField, ScalarField, Rect) {
        // a 1x1 mesh whose two bottom nodes are the only ones inside the region
        let mesh = RectMesh::new(0.0, 1.0, 0.0, 1.0, 1, 1).unwrap();
        let t = ScalarField::new(mesh, vec![truth[0], truth[1], 100.0, 100.0]).unwrap();
        let e = ScalarField::new(mesh, vec![est[0], est[1], 0.0, 0.0]).unwrap();
        (t, e, Rect::new(-1.0, 2.0, -1.0, 0.5).unwrap())
    }

    #[test]
    fn hand_example() {
        let (t, e, r) = two_points([1.0, 2.0], [1.0, 3.0]);
        let m = rmse_mae_me(&t, &e, &r).unwrap();
        assert_eq!(m.points, 2);
        assert!((m.rmse - 1.0 / (2.0f64.sqrt() * 2.0)).abs() < 1e-15);
        assert_eq!(m.mae, 0.25);
        assert_eq!(m.me, -0.25);
    }

    #[test]
    fn identity_is_zero() {
        let (t, _, r) = two_points([1.0, 2.0], [0.0, 0.0]);
        let m = rmse_mae_me(&t, &t, &r).unwrap();
        assert_eq!((m.rmse, m.mae, m.me), (0.0, 0.0, 0.0));
    }

    #[test]
    fn errors() {
        let (t, e, _) = two_points([0.0, 0.0], [1.0, 1.0]);
        assert!(matches!(rmse_mae_me(&t, &e, &Rect::new(5.0, 6.0, 5.0, 6.0).unwrap()), Err(Error::EmptyRegion)));
        assert!(matches!(
            rmse_mae_me(&t, &e, &Rect::new(-1.0, 2.0, -1.0, 0.5).unwrap()),
            Err(Error::ZeroDenominator(_))
        ));
        let z = ScalarField::zeros(*t.mesh());
        assert!(consecutive_diff(&t, &z).is_err());
    }

    #[test]
    fn uniform_shift() {
        let mesh = RectMesh::new(0.0, 1.0, 0.0, 1.0, 3, 2).unwrap();
        let prev = ScalarField::constant(mesh, 1.0);
        let cur = ScalarField::constant(mesh, 1.25);
        assert!((consecutive_diff(&cur, &prev).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(consecutive_diff(&prev, &prev).unwrap(), 0.0);
    }

    #[test]
    fn two_bumps() {
        let mesh = RectMesh::new(0.0, 10.0, 0.0, 5.0, 40, 20).unwrap();
        let f = ScalarField::from_fn(mesh, |x, z| {
            2.0 * (-((x - 3.0).powi(2) + (z - 2.5).powi(2))).exp() + (-((x - 7.0).powi(2) + (z - 2.0).powi(2))).exp()
        })
        .unwrap();
        let peaks = local_maxima(&f, &Rect::new(0.0, 10.0, 0.0, 5.0).unwrap());
        assert_eq!(peaks.len(), 2);
        assert_eq!((peaks[0].x, peaks[0].z), (3.0, 2.5));
        assert_eq!((peaks[1].x, peaks[1].z), (7.0, 2.0));
        let flat = ScalarField::constant(mesh, 1.0);
        assert_eq!(local_maxima(&flat, &Rect::new(0.0, 10.0, 0.0, 5.0).unwrap()).len(), 1);
    }
}
