use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::forward_data::{BoundaryModel, ForwardModel, MeasurementLayout, Preprocessing, SourceSchedule};
use crate::grid_fem::{Quadrature, Rect, RectMesh, RobinSpec};
use crate::inversion::{InnerConfig, InversionConfig, RecoveryBasis, RecoveryOptions};
use crate::tail::AcceleratorConfig;

/// Outer boundary condition of the forward solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OuterBoundary {
    /// Source-matched absorbing Robin coefficient.
    Absorbing,
    /// Constant Robin coefficient `κ = k`.
    Constant,
}

/// Quadrature of the forward solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForwardQuadrature {
    LowDispersion,
    Gauss,
}

/// Every parameter of a run. Extents are `[x_min, x_max, z_min, z_max]`,
/// mesh sizes `[nx, nz]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Enlarged forward domain.
    pub outer: [f64; 4],
    pub outer_mesh: [usize; 2],
    /// Reconstruction domain.
    pub omega: [f64; 4],
    pub inversion_mesh: [usize; 2],
    /// Scoring region.
    pub region: [f64; 4],
    pub diffusion: f64,
    pub background_mu_a: f64,
    pub outer_boundary: OuterBoundary,
    pub forward_quadrature: ForwardQuadrature,

    pub source_count: usize,
    pub source_first: f64,
    pub source_step: f64,
    pub source_line: f64,

    pub vertical_points: usize,
    pub horizontal_points: usize,
    pub noise_level: f64,
    pub seed: u64,
    pub polynomial_degree: usize,
    /// Fit the smoothing polynomial to the log of the data.
    pub log_domain_fit: bool,

    /// Stopping tolerance of the accelerator and the inner loops.
    pub tolerance: f64,
    pub inner_max_iters: usize,
    pub gamma: f64,
    pub accelerator_max_iters: usize,
    pub exponent_cap: f64,
    /// Unit of coefficient differences inside the relaxation exponent.
    pub difference_scale: f64,
    pub relaxed: bool,
    /// Source indices feeding the first-guess tail.
    pub tail_sources: Vec<usize>,
    /// Coarse elements of the recovery basis, `[ex, ez]`.
    pub recovery_elements: [usize; 2],
    /// Coefficient floor as a fraction of the background.
    pub floor_fraction: f64,
    /// Recover `(a − a_background) u` rather than `a u`.
    pub anchored_recovery: bool,

    pub example: u8,
    pub centers: Vec<[f64; 2]>,
    /// Disc radii; the example's own radii when absent.
    pub radii: Option<Vec<f64>>,
    pub inclusion_mu_a: f64,
    /// Relative amplitude of the white-noise texture of example 3.
    pub texture_amplitude: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            outer: [0.0, 20.0, 0.0, 15.0],
            outer_mesh: [130, 93],
            omega: [5.0, 15.0, 5.0, 10.0],
            inversion_mesh: [180, 90],
            region: [5.0, 15.0, 5.0, 8.0],
            diffusion: 0.02,
            background_mu_a: 0.1,
            outer_boundary: OuterBoundary::Absorbing,
            forward_quadrature: ForwardQuadrature::LowDispersion,
            source_count: 5,
            source_first: 0.0,
            source_step: 0.625,
            source_line: 10.0,
            vertical_points: 65,
            horizontal_points: 31,
            noise_level: 0.02,
            seed: 0,
            polynomial_degree: 8,
            log_domain_fit: true,
            tolerance: 1e-5,
            inner_max_iters: 100,
            gamma: 1.05,
            accelerator_max_iters: 300,
            exponent_cap: 50.0,
            difference_scale: 0.02,
            relaxed: true,
            tail_sources: vec![0, 1, 2],
            recovery_elements: [30, 15],
            floor_fraction: 0.1,
            anchored_recovery: true,
            example: 1,
            centers: vec![[7.0, 7.0], [13.0, 7.0]],
            radii: None,
            inclusion_mu_a: 0.3,
            texture_amplitude: 0.1,
        }
    }
}

fn rect(e: [f64; 4]) -> Result<Rect> {
    Rect::new(e[0], e[1], e[2], e[3])
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Canonical text of the resolved configuration; defaults included.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of [`RunConfig::to_toml`].
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    /// `a = μ_a / D` of the background.
    pub fn a_background(&self) -> f64 {
        self.background_mu_a / self.diffusion
    }

    pub fn k(&self) -> f64 {
        self.a_background().sqrt()
    }

    /// Reduced scattering coefficient, from `D = 1/(3μ′_s)`.
    pub fn reduced_scattering(&self) -> f64 {
        1.0 / (3.0 * self.diffusion)
    }

    pub fn radii(&self) -> Vec<f64> {
        match &self.radii {
            Some(r) => r.clone(),
            None if self.example == 3 => vec![1.0, 0.6],
            None => vec![1.0; self.centers.len()],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(1..=3).contains(&self.example) {
            return bad(format!("example must be 1, 2 or 3, got {}", self.example));
        }
        // TOML integers are signed
        if self.seed > i64::MAX as u64 {
            return bad(format!("seed must be at most {}, got {}", i64::MAX, self.seed));
        }
        let outer = rect(self.outer)?;
        let omega = rect(self.omega)?;
        let region = rect(self.region)?;
        if !outer.contains_rect(&omega) || !omega.contains_rect(&region) {
            return bad("extents must nest: region inside omega inside outer".into());
        }
        if !(self.noise_level >= 0.0) || !(self.tolerance > 0.0) || !(self.floor_fraction >= 0.0) {
            return bad("noise level, tolerance and floor fraction must be non-negative".into());
        }
        if self.tail_sources.is_empty() || self.tail_sources.iter().any(|&i| i >= self.source_count) {
            return bad(format!("tail sources {:?} must index the {} sources", self.tail_sources, self.source_count));
        }
        if self.radii().len() != self.centers.len() {
            return bad("one radius per inclusion center".into());
        }
        for (c, r) in self.centers.iter().zip(self.radii()) {
            if !(r > 0.0) || !omega.contains(c[0] - r, c[1] - r) || !omega.contains(c[0] + r, c[1] + r) {
                return Err(Error::Geometry(format!("inclusion at ({}, {}) radius {r} leaves omega", c[0], c[1])));
            }
        }
        self.schedule()?;
        self.layout()?;
        self.forward_model()?;
        Ok(())
    }

    pub fn outer_mesh(&self) -> Result<RectMesh> {
        let e = self.outer;
        RectMesh::new(e[0], e[1], e[2], e[3], self.outer_mesh[0], self.outer_mesh[1])
    }

    pub fn inversion_mesh(&self) -> Result<RectMesh> {
        let e = self.omega;
        RectMesh::new(e[0], e[1], e[2], e[3], self.inversion_mesh[0], self.inversion_mesh[1])
    }

    pub fn omega(&self) -> Result<Rect> {
        rect(self.omega)
    }

    pub fn region(&self) -> Result<Rect> {
        rect(self.region)
    }

    pub fn schedule(&self) -> Result<SourceSchedule> {
        SourceSchedule::new(self.source_first, self.source_step, self.source_count, self.source_line, &self.omega()?)
    }

    pub fn layout(&self) -> Result<MeasurementLayout> {
        MeasurementLayout::new(self.omega()?, self.vertical_points, self.horizontal_points)
    }

    pub fn preprocessing(&self) -> Preprocessing {
        Preprocessing {
            noise_level: self.noise_level,
            seed: self.seed,
            degree: self.polynomial_degree,
            log_domain: self.log_domain_fit,
        }
    }

    pub fn forward_model(&self) -> Result<ForwardModel> {
        let model = ForwardModel::new(self.diffusion, self.background_mu_a)?;
        let model = match self.outer_boundary {
            OuterBoundary::Absorbing => model,
            OuterBoundary::Constant => model.with_boundary(BoundaryModel::Robin(RobinSpec::new(self.k())?)),
        };
        Ok(match self.forward_quadrature {
            ForwardQuadrature::LowDispersion => model,
            ForwardQuadrature::Gauss => model.with_quadrature(Quadrature::Gauss),
        })
    }

    pub fn recovery_basis(&self) -> Result<RecoveryBasis> {
        RecoveryBasis::new(self.inversion_mesh()?, self.recovery_elements[0], self.recovery_elements[1])
    }

    pub fn recovery_options(&self) -> RecoveryOptions {
        RecoveryOptions {
            floor: self.floor_fraction * self.a_background(),
            anchor: self.anchored_recovery.then(|| self.a_background()),
        }
    }

    pub fn accelerator(&self) -> AcceleratorConfig {
        AcceleratorConfig {
            gamma: self.gamma,
            tolerance: self.tolerance,
            max_iters: self.accelerator_max_iters,
            exponent_cap: self.exponent_cap,
            difference_scale: self.difference_scale,
            floor: self.floor_fraction * self.a_background(),
            relaxed: self.relaxed,
        }
    }

    pub fn inversion(&self) -> InversionConfig {
        InversionConfig {
            inner: InnerConfig { tolerance: self.tolerance, max_iters: self.inner_max_iters },
            recovery: self.recovery_options(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_field_by_field() {
        let c = RunConfig::default();
        assert_eq!(c.outer, [0.0, 20.0, 0.0, 15.0]);
        assert_eq!(c.outer_mesh, [130, 93]);
        assert_eq!(c.omega, [5.0, 15.0, 5.0, 10.0]);
        assert_eq!(c.region, [5.0, 15.0, 5.0, 8.0]);
        assert_eq!(c.diffusion, 0.02);
        assert_eq!(c.background_mu_a, 0.1);
        assert!((c.a_background() - 5.0).abs() < 1e-12);
        assert!((c.k() - 5f64.sqrt()).abs() < 1e-12);
        assert!((c.reduced_scattering() - 50.0 / 3.0).abs() < 1e-12);
        assert_eq!((c.source_count, c.source_first, c.source_step, c.source_line), (5, 0.0, 0.625, 10.0));
        assert_eq!((c.vertical_points, c.horizontal_points), (65, 31));
        assert_eq!(c.noise_level, 0.02);
        assert_eq!(c.polynomial_degree, 8);
        assert_eq!(c.tolerance, 1e-5);
        assert_eq!(c.gamma, 1.05);
        assert_eq!(c.accelerator_max_iters, 300);
        assert_eq!(c.inner_max_iters, 100);
        assert_eq!(c.tail_sources.len(), 3);
        assert_eq!(c.recovery_elements[0] * c.recovery_elements[1], 450);
        assert_eq!((c.inclusion_mu_a, c.texture_amplitude), (0.3, 0.1));
        assert!((c.inclusion_mu_a / c.background_mu_a - 3.0).abs() < 1e-12);
        let s = c.schedule().unwrap();
        assert_eq!(s.intervals(), 4);
        assert_eq!(s.last(), 2.5);
        assert_eq!(c.recovery_basis().unwrap().interior_dofs(), 450);
        c.validate().unwrap();
    }

    #[test]
    fn toml_round_trip_and_unknown_keys() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
        assert_eq!(RunConfig::from_toml("").unwrap(), c);
        let over = RunConfig::from_toml("seed = 7\nnoise_level = 0.0\n").unwrap();
        assert_eq!((over.seed, over.noise_level), (7, 0.0));
        assert_ne!(over.hash(), c.hash());
        assert!(matches!(RunConfig::from_toml("sed = 7"), Err(Error::Config(_))));
    }

    #[test]
    fn geometry_checks() {
        let c = RunConfig { centers: vec![[5.5, 7.0], [13.0, 7.0]], ..RunConfig::default() };
        assert!(matches!(c.validate(), Err(Error::Geometry(_))));
        let c = RunConfig { example: 4, ..RunConfig::default() };
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let c = RunConfig { example: 3, ..RunConfig::default() };
        assert_eq!(c.radii(), vec![1.0, 0.6]);
    }
}
