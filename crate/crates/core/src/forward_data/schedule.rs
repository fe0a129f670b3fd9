use crate::error::{Error, Result};
use crate::grid_fem::Rect;

/// Sources `(s_i, z_line)` at uniformly spaced, increasing positions.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSchedule {
    z_line: f64,
    positions: Vec<f64>,
    step: f64,
}

impl SourceSchedule {
    /// `count` sources starting at `first` with spacing `step`, checked to lie
    /// outside the closed domain `omega`.
    pub fn new(first: f64, step: f64, count: usize, z_line: f64, omega: &Rect) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::ZeroGap);
        }
        if count < 2 {
            return Err(Error::Config(format!("need at least two sources, got {count}")));
        }
        let positions: Vec<f64> = (0..count).map(|i| first + step * i as f64).collect();
        if let Some(&s) = positions.iter().find(|&&s| omega.contains(s, z_line)) {
            return Err(Error::SourceInDomain { s });
        }
        Ok(Self { z_line, positions, step })
    }

    pub fn z_line(&self) -> f64 {
        self.z_line
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    /// Source spacing.
    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of intervals between consecutive sources.
    pub fn intervals(&self) -> usize {
        self.positions.len() - 1
    }

    pub fn first(&self) -> f64 {
        self.positions[0]
    }

    /// Position of the last source, the one nearest the domain.
    pub fn last(&self) -> f64 {
        *self.positions.last().expect("schedule has at least two sources")
    }

    pub fn source(&self, i: usize) -> (f64, f64) {
        (self.positions[i], self.z_line)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn omega() -> Rect {
        Rect::new(5.0, 15.0, 5.0, 10.0).unwrap()
    }

    #[test]
    fn default_schedule() {
        let s = SourceSchedule::new(0.0, 0.625, 5, 10.0, &omega()).unwrap();
        assert_eq!(s.positions(), &[0.0, 0.625, 1.25, 1.875, 2.5]);
        assert_eq!(s.intervals(), 4);
        assert_eq!(s.last(), 2.5);
    }

    #[test]
    fn rejects_source_on_domain() {
        assert!(matches!(SourceSchedule::new(3.75, 0.625, 3, 10.0, &omega()), Err(Error::SourceInDomain { .. })));
        assert!(matches!(SourceSchedule::new(0.0, 0.0, 3, 10.0, &omega()), Err(Error::ZeroGap)));
    }
}
