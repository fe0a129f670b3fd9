use std::fmt::Write as _;
use std::path::Path;

use super::forward::{solve_forward, ForwardModel};
use super::layout::{MeasurementLayout, Side};
use super::processing::{add_noise_stream, average_psi, denoise_polyfit, log_transform, s_derivative};
use super::schedule::SourceSchedule;
use crate::error::{Error, Result};
use crate::grid_fem::{fmt17, parse_f64, parse_usize, Rect, ScalarField};

/// Noise and smoothing applied to the simulated traces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preprocessing {
    /// Multiplicative noise amplitude.
    pub noise_level: f64,
    pub seed: u64,
    /// Degree of the per-side least-squares polynomial.
    pub degree: usize,
    /// Fit the polynomial to `ln φ` and exponentiate, instead of fitting `φ`.
    pub log_domain: bool,
}

impl Default for Preprocessing {
    fn default() -> Self {
        Self { noise_level: 0.02, seed: 0, degree: 8, log_domain: true }
    }
}

/// Boundary data of one source.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceTrace {
    pub position: f64,
    pub raw: Vec<f64>,
    pub noisy: Vec<f64>,
    pub denoised: Vec<f64>,
}

/// Everything the inversion consumes: traces per source and the derivative
/// data per interval between consecutive sources.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    schedule: SourceSchedule,
    layout: MeasurementLayout,
    preprocessing: Preprocessing,
    traces: Vec<SourceTrace>,
    logs: Vec<Vec<f64>>,
    psi: Vec<Vec<f64>>,
    log_clamped: usize,
}

/// Smooth each side of `trace` separately. Corner points keep the value of
/// the side they are listed under.
fn denoise_sides(layout: &MeasurementLayout, trace: &[f64], pre: &Preprocessing) -> Result<Vec<f64>> {
    let mut out = vec![f64::NAN; trace.len()];
    for side in Side::ALL {
        let idx = layout.side_indices(side);
        let idx: Vec<usize> = idx.into_iter().filter(|&k| k < trace.len()).collect();
        if idx.is_empty() {
            continue;
        }
        let coords: Vec<f64> = idx.iter().map(|&k| layout.points()[k].coord_on(side)).collect();
        let values: Vec<f64> = if pre.log_domain {
            idx.iter().map(|&k| trace[k].max(f64::MIN_POSITIVE).ln()).collect()
        } else {
            idx.iter().map(|&k| trace[k]).collect()
        };
        let fit = denoise_polyfit(&coords, &values, pre.degree)?;
        for (&k, f) in idx.iter().zip(fit) {
            if layout.points()[k].side == side {
                out[k] = if pre.log_domain { f.exp() } else { f };
            }
        }
    }
    if let Some(k) = out.iter().position(|v| !v.is_finite()) {
        return Err(Error::MissingEdgeData(format!("point {k} is not covered by a complete side")));
    }
    Ok(out)
}

impl MeasurementSet {
    /// Simulate data for every source of `schedule`.
    pub fn simulate(
        mu_a: &ScalarField,
        model: &ForwardModel,
        schedule: SourceSchedule,
        layout: MeasurementLayout,
        preprocessing: Preprocessing,
    ) -> Result<Self> {
        let mut raw = Vec::with_capacity(schedule.positions().len());
        for i in 0..schedule.positions().len() {
            let u = solve_forward(mu_a, model, schedule.source(i))?;
            raw.push(layout.extract(&u)?);
        }
        Self::from_raw(schedule, layout, preprocessing, raw)
    }

    /// Build the set from raw traces, one per source.
    pub fn from_raw(
        schedule: SourceSchedule,
        layout: MeasurementLayout,
        preprocessing: Preprocessing,
        raw: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if raw.len() != schedule.positions().len() {
            return Err(Error::TraceCount { expected: schedule.positions().len(), got: raw.len() });
        }
        let mut traces = Vec::with_capacity(raw.len());
        for (i, raw) in raw.into_iter().enumerate() {
            if raw.len() != layout.len() {
                return Err(Error::TraceCount { expected: layout.len(), got: raw.len() });
            }
            if let Some(k) = raw.iter().position(|v| !(*v > 0.0)) {
                return Err(Error::Domain(format!("raw trace of source {i} is not positive at point {k}")));
            }
            let noisy = add_noise_stream(&raw, preprocessing.noise_level, preprocessing.seed, i as u64);
            let denoised = denoise_sides(&layout, &noisy, &preprocessing)?;
            traces.push(SourceTrace { position: schedule.positions()[i], raw, noisy, denoised });
        }
        Self::assemble(schedule, layout, preprocessing, traces)
    }

    fn assemble(
        schedule: SourceSchedule,
        layout: MeasurementLayout,
        preprocessing: Preprocessing,
        traces: Vec<SourceTrace>,
    ) -> Result<Self> {
        let mut log_clamped = 0;
        let logs: Vec<Vec<f64>> = traces
            .iter()
            .map(|t| {
                let (v, c) = log_transform(&t.denoised);
                log_clamped += c;
                v
            })
            .collect();
        let psi = logs
            .windows(2)
            .map(|w| average_psi(&[s_derivative(&w[0], &w[1], schedule.step())?]))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { schedule, layout, preprocessing, traces, logs, psi, log_clamped })
    }

    pub fn schedule(&self) -> &SourceSchedule {
        &self.schedule
    }

    pub fn layout(&self) -> &MeasurementLayout {
        &self.layout
    }

    pub fn preprocessing(&self) -> &Preprocessing {
        &self.preprocessing
    }

    pub fn traces(&self) -> &[SourceTrace] {
        &self.traces
    }

    /// `ln` of the denoised trace of source `i` (increasing position order).
    pub fn log_trace(&self, i: usize) -> &[f64] {
        &self.logs[i]
    }

    /// Interval-averaged derivative data, interval `i` spanning sources `i`
    /// and `i + 1`.
    pub fn psi(&self, i: usize) -> &[f64] {
        &self.psi[i]
    }

    pub fn psi_all(&self) -> &[Vec<f64>] {
        &self.psi
    }

    pub fn log_clamped(&self) -> usize {
        self.log_clamped
    }

    pub fn to_text(&self) -> String {
        let s = &self.schedule;
        let l = &self.layout;
        let o = l.omega();
        let p = &self.preprocessing;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "sources {} h {} z_line {} points {}",
            s.positions().len(),
            fmt17(s.step()),
            fmt17(s.z_line()),
            l.len()
        );
        let _ = writeln!(
            out,
            "omega {} {} {} {} vertical {} horizontal {}",
            fmt17(o.x_min),
            fmt17(o.x_max),
            fmt17(o.z_min),
            fmt17(o.z_max),
            l.vertical(),
            l.horizontal()
        );
        let _ = writeln!(
            out,
            "noise {} seed {} degree {} log_domain {}",
            fmt17(p.noise_level),
            p.seed,
            p.degree,
            p.log_domain
        );
        for t in &self.traces {
            let _ = writeln!(out, "s={}", fmt17(t.position));
            for (k, pt) in l.points().iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{} {} {} {} {}",
                    pt.side.letter(),
                    fmt17(pt.coord()),
                    fmt17(t.raw[k]),
                    fmt17(t.noisy[k]),
                    fmt17(t.denoised[k])
                );
            }
        }
        for (i, psi) in self.psi.iter().enumerate() {
            let _ = writeln!(out, "psi={} {} {}", i + 1, fmt17(s.positions()[i]), fmt17(s.positions()[i + 1]));
            for (pt, v) in l.points().iter().zip(psi) {
                let _ = writeln!(out, "{} {} {}", pt.side.letter(), fmt17(pt.coord()), fmt17(*v));
            }
        }
        out
    }

    /// Parse a file written by [`MeasurementSet::to_text`]. The derivative
    /// blocks are recomputed from the traces and checked against the file.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let mut next = |what: &str| lines.next().ok_or_else(|| Error::Parse(format!("missing {what}")));
        let head: Vec<&str> = next("header")?.split_whitespace().collect();
        let geo: Vec<&str> = next("omega line")?.split_whitespace().collect();
        let noise: Vec<&str> = next("noise line")?.split_whitespace().collect();
        let keyed = |tokens: &[&str], key: &str| -> Result<String> {
            tokens
                .windows(2)
                .find(|w| w[0] == key)
                .map(|w| w[1].to_string())
                .ok_or_else(|| Error::Parse(format!("missing key {key}")))
        };
        let count = parse_usize(&keyed(&head, "sources")?)?;
        let step = parse_f64(&keyed(&head, "h")?)?;
        let z_line = parse_f64(&keyed(&head, "z_line")?)?;
        let npoints = parse_usize(&keyed(&head, "points")?)?;
        if geo.len() < 5 || geo[0] != "omega" {
            return Err(Error::Parse("malformed omega line".into()));
        }
        let omega = Rect::new(parse_f64(geo[1])?, parse_f64(geo[2])?, parse_f64(geo[3])?, parse_f64(geo[4])?)?;
        let layout =
            MeasurementLayout::new(omega, parse_usize(&keyed(&geo, "vertical")?)?, parse_usize(&keyed(&geo, "horizontal")?)?)?;
        if layout.len() != npoints {
            return Err(Error::Parse(format!("header says {npoints} points, layout has {}", layout.len())));
        }
        let preprocessing = Preprocessing {
            noise_level: parse_f64(&keyed(&noise, "noise")?)?,
            seed: keyed(&noise, "seed")?.parse().map_err(|e| Error::Parse(format!("seed: {e}")))?,
            degree: parse_usize(&keyed(&noise, "degree")?)?,
            log_domain: keyed(&noise, "log_domain")?.parse().map_err(|e| Error::Parse(format!("log_domain: {e}")))?,
        };
        let mut traces = Vec::with_capacity(count);
        for _ in 0..count {
            let block = next("source block")?;
            let position = parse_f64(block.strip_prefix("s=").ok_or_else(|| Error::Parse(format!("expected s=, got {block:?}")))?)?;
            let mut t = SourceTrace { position, raw: vec![], noisy: vec![], denoised: vec![] };
            for pt in layout.points() {
                let f: Vec<&str> = next("trace line")?.split_whitespace().collect();
                if f.len() != 5 || Side::from_letter(f[0])? != pt.side {
                    return Err(Error::Parse(format!("trace line does not match point {pt:?}")));
                }
                t.raw.push(parse_f64(f[2])?);
                t.noisy.push(parse_f64(f[3])?);
                t.denoised.push(parse_f64(f[4])?);
            }
            traces.push(t);
        }
        let first = traces.first().ok_or_else(|| Error::Parse("no sources".into()))?.position;
        let schedule = SourceSchedule::new(first, step, count, z_line, &omega)?;
        for (t, &p) in traces.iter().zip(schedule.positions()) {
            if (t.position - p).abs() > 1e-12 * (1.0 + p.abs()) {
                return Err(Error::Parse(format!("source at {} is off the uniform schedule", t.position)));
            }
        }
        let set = Self::assemble(schedule, layout, preprocessing, traces)?;
        for psi in &set.psi {
            let _ = next("psi block")?;
            for &v in psi {
                let f: Vec<&str> = next("psi line")?.split_whitespace().collect();
                let stored = parse_f64(f.get(2).ok_or_else(|| Error::Parse("short psi line".into()))?)?;
                if (stored - v).abs() > 1e-9 * (1.0 + v.abs()) {
                    return Err(Error::Parse("stored derivative data disagree with the traces".into()));
                }
            }
        }
        Ok(set)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}
