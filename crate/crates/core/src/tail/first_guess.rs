use crate::error::{Error, Result};
use crate::forward_data::{interp_sorted, MeasurementSet, Side};
use crate::grid_fem::{gradient, RectMesh, ScalarField};

/// Distance from `(x, z)` to the source.
pub fn pseudo_distance(x: f64, z: f64, source: (f64, f64)) -> f64 {
    (x - source.0).hypot(z - source.1)
}

/// Leading asymptotic part of `ln K0(k S)` up to constants: `−k S + ½ ln(π / (2 S))`.
pub fn asymptotic_log(distance: f64, k: f64) -> f64 {
    -k * distance + 0.5 * (std::f64::consts::PI / (2.0 * distance)).ln()
}

/// Remainder `g` of boundary log-data after removing the asymptotic part,
/// averaged over sources.
///
/// `traces[j][p]` is `ln u` at `points[p]` for the source at `sources[j]`.
pub fn decompose_g(traces: &[&[f64]], points: &[(f64, f64)], sources: &[(f64, f64)], k: f64) -> Result<Vec<f64>> {
    if traces.is_empty() || traces.len() != sources.len() {
        return Err(Error::TraceCount { expected: sources.len().max(1), got: traces.len() });
    }
    if let Some(t) = traces.iter().find(|t| t.len() != points.len()) {
        return Err(Error::TraceCount { expected: points.len(), got: t.len() });
    }
    let weight = 1.0 / traces.len() as f64;
    let mut g = vec![0.0; points.len()];
    for (trace, &src) in traces.iter().zip(sources) {
        for ((gp, &v), &(x, z)) in g.iter_mut().zip(trace.iter()).zip(points) {
            *gp += weight * (v - asymptotic_log(pseudo_distance(x, z, src), k));
        }
    }
    Ok(g)
}

/// Where a tail came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailOrigin {
    FirstGuess,
    Accelerated { iterations: usize },
}

/// Approximation of `ln u` for the last source, with its gradient. Immutable
/// once built.
#[derive(Debug, Clone)]
pub struct TailFunction {
    values: ScalarField,
    grad_x: ScalarField,
    grad_z: ScalarField,
    origin: TailOrigin,
}

impl TailFunction {
    pub fn new(values: ScalarField, origin: TailOrigin) -> Result<Self> {
        let (grad_x, grad_z) = gradient(&values)?;
        Ok(Self { values, grad_x, grad_z, origin })
    }

    pub fn values(&self) -> &ScalarField {
        &self.values
    }

    pub fn gradient(&self) -> (&ScalarField, &ScalarField) {
        (&self.grad_x, &self.grad_z)
    }

    pub fn origin(&self) -> TailOrigin {
        self.origin
    }

    pub fn mesh(&self) -> &RectMesh {
        self.values.mesh()
    }
}

/// Asymptotic first guess of the tail on `mesh`.
///
/// The remainder `g` is taken from the bottom side (frozen in z) and from the
/// left side (frozen in x) using the sources listed in `sources_used`, and
/// the two extensions are averaged.
pub fn first_guess_tail(data: &MeasurementSet, mesh: &RectMesh, k: f64, sources_used: &[usize]) -> Result<TailFunction> {
    let schedule = data.schedule();
    let last = schedule.source(schedule.positions().len() - 1);
    if sources_used.is_empty() || sources_used.iter().any(|&i| i >= schedule.positions().len()) {
        return Err(Error::MissingEdgeData(format!("invalid source selection {sources_used:?}")));
    }
    let layout = data.layout();
    let sources: Vec<(f64, f64)> = sources_used.iter().map(|&i| schedule.source(i)).collect();
    let side_g = |side: Side| -> Result<(Vec<f64>, Vec<f64>)> {
        let idx = layout.side_indices(side);
        if idx.iter().any(|&k| k >= data.log_trace(0).len()) {
            return Err(Error::MissingEdgeData(format!("no data on side {}", side.letter())));
        }
        let pts: Vec<(f64, f64)> = idx.iter().map(|&k| (layout.points()[k].x, layout.points()[k].z)).collect();
        let traces: Vec<Vec<f64>> = sources_used.iter().map(|&j| idx.iter().map(|&k| data.log_trace(j)[k]).collect()).collect();
        let refs: Vec<&[f64]> = traces.iter().map(|t| t.as_slice()).collect();
        let g = decompose_g(&refs, &pts, &sources, k)?;
        let coords = pts.iter().map(|&(x, z)| if side.is_vertical() { z } else { x }).collect();
        Ok((coords, g))
    };
    let (bx, bg) = side_g(Side::Bottom)?;
    let (lz, lg) = side_g(Side::Left)?;
    let values = ScalarField::from_fn(*mesh, |x, z| {
        let g = 0.5 * (interp_sorted(&bx, &bg, x) + interp_sorted(&lz, &lg, z));
        asymptotic_log(pseudo_distance(x, z, last), k) + g
    })?;
    TailFunction::new(values, TailOrigin::FirstGuess)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distances() {
        assert!((pseudo_distance(5.0, 5.0, (0.0, 10.0)) - 50f64.sqrt()).abs() < 1e-15);
        assert_eq!(pseudo_distance(1.0, 2.0, (1.0, 2.0)), 0.0);
        assert_eq!(pseudo_distance(15.0, 10.0, (2.5, 10.0)), 12.5);
    }

    #[test]
    fn recovers_known_remainder() {
        let k = 5f64.sqrt();
        let pts: Vec<(f64, f64)> = (0..20).map(|i| (5.0 + 0.5 * i as f64, 5.0)).collect();
        let sources = [(0.0, 10.0), (0.625, 10.0), (1.25, 10.0)];
        let remainder = |x: f64| 0.3 * x.sin() - 1.0;
        let traces: Vec<Vec<f64>> = sources
            .iter()
            .map(|&s| pts.iter().map(|&(x, z)| asymptotic_log(pseudo_distance(x, z, s), k) + remainder(x)).collect())
            .collect();
        let refs: Vec<&[f64]> = traces.iter().map(|t| t.as_slice()).collect();
        let g = decompose_g(&refs, &pts, &sources, k).unwrap();
        for (gv, &(x, _)) in g.iter().zip(&pts) {
            assert!((gv - remainder(x)).abs() < 1e-12);
        }
        assert!(decompose_g(&refs[..2], &pts, &sources, k).is_err());
    }
}
