use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::config::RunConfig;
use crate::error::{Error, Result};
use crate::grid_fem::{RectMesh, ScalarField};

/// Stream of the texture noise; measurement noise uses the source indices.
const TEXTURE_STREAM: u64 = u64::MAX;

/// Absorption profile inside the inclusions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    /// Constant peak value.
    Flat,
    /// `max(peak · cos d, background)`, `d` the distance to the disc center in cm.
    Cosine,
    /// Cosine profile multiplied by `1 + amplitude · η`, `η` white noise on `[−1, 1]`.
    Textured { amplitude: f64, seed: u64 },
}

/// Disc inclusions in a homogeneous background, as an absorption map.
#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    pub centers: Vec<(f64, f64)>,
    pub radii: Vec<f64>,
    pub peak: f64,
    pub background: f64,
    pub profile: Profile,
}

impl Phantom {
    /// The phantom of `config.example`.
    pub fn from_config(config: &RunConfig) -> Result<Self> {
        let profile = match config.example {
            1 => Profile::Flat,
            2 => Profile::Cosine,
            3 => Profile::Textured { amplitude: config.texture_amplitude, seed: config.seed },
            other => return Err(Error::Config(format!("unknown example {other}"))),
        };
        Ok(Self {
            centers: config.centers.iter().map(|c| (c[0], c[1])).collect(),
            radii: config.radii(),
            peak: config.inclusion_mu_a,
            background: config.background_mu_a,
            profile,
        })
    }

    /// Background only.
    pub fn homogeneous(background: f64) -> Self {
        Self { centers: vec![], radii: vec![], peak: background, background, profile: Profile::Flat }
    }

    /// Inclusion containing `(x, z)` and the distance to its center.
    fn inclusion_at(&self, x: f64, z: f64) -> Option<f64> {
        self.centers
            .iter()
            .zip(&self.radii)
            .map(|(c, &r)| ((x - c.0).hypot(z - c.1), r))
            .filter(|&(d, r)| d <= r)
            .map(|(d, _)| d)
            .reduce(f64::min)
    }

    /// Value at a point for a given texture sample `eta`.
    fn value(&self, x: f64, z: f64, eta: f64) -> f64 {
        let Some(d) = self.inclusion_at(x, z) else {
            return self.background;
        };
        match self.profile {
            Profile::Flat => self.peak,
            Profile::Cosine => (self.peak * d.cos()).max(self.background),
            Profile::Textured { amplitude, .. } => (self.peak * d.cos() * (1.0 + amplitude * eta)).max(self.background),
        }
    }

    /// Evaluate the absorption `μ_a` at every node of `mesh`. Texture samples
    /// are drawn node by node in storage order.
    pub fn sample(&self, mesh: &RectMesh) -> Result<ScalarField> {
        let mut rng = match self.profile {
            Profile::Textured { seed, .. } => {
                let mut rng = ChaCha20Rng::seed_from_u64(seed);
                rng.set_stream(TEXTURE_STREAM);
                Some(rng)
            }
            _ => None,
        };
        let values = (0..mesh.node_count())
            .map(|n| {
                let eta = rng.as_mut().map_or(0.0, |r| r.gen_range(-1.0..=1.0));
                let (x, z) = mesh.coords(n);
                self.value(x, z, eta)
            })
            .collect();
        ScalarField::new(*mesh, values)
    }
}
