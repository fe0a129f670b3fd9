use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};

/// Floor applied before taking logarithms.
pub const LOG_FLOOR: f64 = 1e-30;

/// Multiplicative noise `φ (1 + level W)`, `W` uniform on `[−1, 1]`.
pub fn add_noise(trace: &[f64], level: f64, seed: u64) -> Vec<f64> {
    add_noise_stream(trace, level, seed, 0)
}

/// [`add_noise`] drawing from an independent stream of the same seed, so
/// several traces can share one seed without sharing samples.
pub fn add_noise_stream(trace: &[f64], level: f64, seed: u64, stream: u64) -> Vec<f64> {
    if level == 0.0 {
        return trace.to_vec();
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    trace.iter().map(|&v| v * (1.0 + level * rng.gen_range(-1.0..=1.0))).collect()
}

/// Legendre polynomials `P_0..=P_degree` at `t`.
fn legendre(t: f64, degree: usize) -> Vec<f64> {
    let mut p = Vec::with_capacity(degree + 1);
    p.push(1.0);
    if degree >= 1 {
        p.push(t);
    }
    for n in 1..degree {
        let nf = n as f64;
        p.push(((2.0 * nf + 1.0) * t * p[n] - nf * p[n - 1]) / (nf + 1.0));
    }
    p
}

/// Least-squares polynomial of degree `degree` through `(coords, values)`,
/// evaluated back at `coords`. The fit uses Legendre polynomials of the
/// coordinate mapped onto `[−1, 1]`.
pub fn denoise_polyfit(coords: &[f64], values: &[f64], degree: usize) -> Result<Vec<f64>> {
    if coords.len() != values.len() {
        return Err(Error::TraceCount { expected: coords.len(), got: values.len() });
    }
    if coords.len() <= degree {
        return Err(Error::RankDeficient(format!("{} points cannot fix a degree-{degree} fit", coords.len())));
    }
    let lo = coords.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = coords.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::RankDeficient("all abscissae coincide".into()));
    }
    let t: Vec<f64> = coords.iter().map(|&c| (2.0 * c - lo - hi) / (hi - lo)).collect();
    let basis = DMatrix::from_fn(t.len(), degree + 1, |r, c| legendre(t[r], degree)[c]);
    let svd = basis.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-12 * smax) {
        return Err(Error::RankDeficient(format!("condition {:.3e}", smax / smin)));
    }
    let coef = svd
        .solve(&DVector::from_column_slice(values), 0.0)
        .map_err(|e| Error::RankDeficient(e.to_string()))?;
    Ok((&basis * coef).iter().copied().collect())
}

/// `ln(max(φ, LOG_FLOOR))` and the number of clamped entries.
pub fn log_transform(trace: &[f64]) -> (Vec<f64>, usize) {
    let mut clamped = 0;
    let v = trace
        .iter()
        .map(|&p| {
            if p >= LOG_FLOOR {
                p.ln()
            } else {
                clamped += 1;
                LOG_FLOOR.ln()
            }
        })
        .collect();
    (v, clamped)
}

/// Forward difference in the source position: `(v_next − v) / gap`.
pub fn s_derivative(v: &[f64], v_next: &[f64], gap: f64) -> Result<Vec<f64>> {
    if gap == 0.0 || !gap.is_finite() {
        return Err(Error::ZeroGap);
    }
    if v.len() != v_next.len() {
        return Err(Error::TraceCount { expected: v.len(), got: v_next.len() });
    }
    Ok(v.iter().zip(v_next).map(|(a, b)| (b - a) / gap).collect())
}

/// Average over an interval of derivative traces sampled at equally spaced
/// source positions spanning the interval (trapezoid rule). A single sample
/// is returned unchanged.
pub fn average_psi(samples: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = samples.first().ok_or_else(|| Error::EmptyInterval("no derivative samples".into()))?;
    if let Some(bad) = samples.iter().find(|s| s.len() != first.len()) {
        return Err(Error::TraceCount { expected: first.len(), got: bad.len() });
    }
    if samples.len() == 1 {
        return Ok(first.clone());
    }
    let m = samples.len();
    let mut out = vec![0.0; first.len()];
    for (k, s) in samples.iter().enumerate() {
        let w = if k == 0 || k == m - 1 { 0.5 } else { 1.0 };
        for (o, v) in out.iter_mut().zip(s) {
            *o += w * v;
        }
    }
    let scale = 1.0 / (m - 1) as f64;
    out.iter_mut().for_each(|o| *o *= scale);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_noise_is_identity() {
        let t = vec![1.0, 2.0, 3.0];
        assert_eq!(add_noise(&t, 0.0, 1), t);
    }

    #[test]
    fn noise_bounds_and_determinism() {
        let t = vec![2.0; 500];
        let a = add_noise(&t, 0.02, 11);
        assert!(a.iter().all(|v| (v / 2.0 - 1.0).abs() <= 0.02 + 1e-15));
        assert_eq!(a, add_noise(&t, 0.02, 11));
        assert_ne!(a, add_noise(&t, 0.02, 12));
        assert_ne!(a, add_noise_stream(&t, 0.02, 11, 1));
    }

    #[test]
    fn polynomial_reproduced() {
        let x: Vec<f64> = (0..65).map(|i| 5.0 + 5.0 * i as f64 / 64.0).collect();
        let p = |x: f64| 1.0 + 0.3 * x - 0.02 * x.powi(3) + 1e-5 * x.powi(8);
        let y: Vec<f64> = x.iter().map(|&x| p(x)).collect();
        let fit = denoise_polyfit(&x, &y, 8).unwrap();
        for (a, b) in fit.iter().zip(&y) {
            assert!((a - b).abs() <= 1e-10 * b.abs());
        }
    }

    #[test]
    fn constant_reproduced() {
        let x: Vec<f64> = (0..31).map(|i| i as f64).collect();
        let fit = denoise_polyfit(&x, &[3.5; 31], 8).unwrap();
        assert!(fit.iter().all(|v| (v - 3.5).abs() < 1e-13));
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(denoise_polyfit(&[0.0, 1.0], &[1.0, 2.0], 8), Err(Error::RankDeficient(_))));
        assert!(matches!(denoise_polyfit(&[1.0; 12], &[1.0; 12], 8), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn log_cases() {
        assert_eq!(log_transform(&[1.0, 1.0]).0, vec![0.0, 0.0]);
        assert!((log_transform(&[std::f64::consts::E]).0[0] - 1.0).abs() < 1e-15);
        let (v, c) = log_transform(&[0.0, 2.0]);
        assert_eq!(c, 1);
        assert_eq!(v[0], LOG_FLOOR.ln());
    }

    #[test]
    fn derivative_cases() {
        assert_eq!(s_derivative(&[1.0, 2.0], &[1.0, 2.0], 0.5).unwrap(), vec![0.0, 0.0]);
        // v linear in s with slope 3
        let d = s_derivative(&[1.0, -2.0], &[1.0 + 3.0 * 0.625, -2.0 + 3.0 * 0.625], 0.625).unwrap();
        assert!(d.iter().all(|v| (v - 3.0).abs() < 1e-14));
        assert!(matches!(s_derivative(&[1.0], &[1.0], 0.0), Err(Error::ZeroGap)));
    }

    #[test]
    fn averaging_cases() {
        assert_eq!(average_psi(&[vec![2.0, 4.0]]).unwrap(), vec![2.0, 4.0]);
        assert_eq!(average_psi(&[vec![1.5; 3], vec![1.5; 3], vec![1.5; 3]]).unwrap(), vec![1.5; 3]);
        // linear in s: endpoints 1 and 3, midpoint value 2
        assert_eq!(average_psi(&[vec![1.0], vec![3.0]]).unwrap(), vec![2.0]);
        assert!(matches!(average_psi(&[]), Err(Error::EmptyInterval(_))));
    }
}
