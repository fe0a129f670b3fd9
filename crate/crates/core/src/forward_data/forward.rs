use crate::error::{Error, Result};
use crate::grid_fem::{
    assemble_elliptic, bessel_k0, bessel_k1, point_source_load, EllipticProblem, Load, Quadrature, RobinSpec,
    ScalarField,
};

/// Outer boundary condition of the forward problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryModel {
    /// `∂u/∂n + κ u = 0` with the coefficient satisfied by the whole-plane
    /// Green's function of the background medium:
    /// `κ = k K1(kr)/K0(kr) · max(r̂·n, 0)`, `r` measured from the source.
    Absorbing,
    /// Constant Robin coefficient on every side.
    Robin(RobinSpec),
}

/// Parameters of `D Δu − μ_a u = −δ(x − source)` on the mesh of `mu_a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardModel {
    pub diffusion: f64,
    pub background_mu_a: f64,
    pub boundary: BoundaryModel,
    pub quadrature: Quadrature,
}

impl ForwardModel {
    pub fn new(diffusion: f64, background_mu_a: f64) -> Result<Self> {
        if !(diffusion > 0.0 && background_mu_a > 0.0) || !diffusion.is_finite() || !background_mu_a.is_finite() {
            return Err(Error::Config(format!(
                "diffusion and background absorption must be positive, got {diffusion} and {background_mu_a}"
            )));
        }
        Ok(Self { diffusion, background_mu_a, boundary: BoundaryModel::Absorbing, quadrature: Quadrature::LowDispersion })
    }

    /// Decay rate `k = √(μ_a / D)` of the background medium.
    pub fn decay_rate(&self) -> f64 {
        (self.background_mu_a / self.diffusion).sqrt()
    }

    pub fn with_boundary(mut self, boundary: BoundaryModel) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn with_quadrature(mut self, quadrature: Quadrature) -> Self {
        self.quadrature = quadrature;
        self
    }

    pub fn solve(&self, mu_a: &ScalarField, source: (f64, f64)) -> Result<ScalarField> {
        solve_forward(mu_a, self, source)
    }

    /// Whole-plane solution `K0(k r) / (2π D)` of the background medium.
    pub fn green(&self, r: f64) -> Result<f64> {
        Ok(bessel_k0(self.decay_rate() * r)? / (2.0 * std::f64::consts::PI * self.diffusion))
    }
}

/// Absorbing Robin coefficient at `(x, z)` for outward normal `normal`.
fn absorbing_kappa(k: f64, source: (f64, f64), x: f64, z: f64, normal: (f64, f64)) -> f64 {
    let (rx, rz) = (x - source.0, z - source.1);
    let r = rx.hypot(rz);
    let cos = (rx * normal.0 + rz * normal.1) / r;
    if !(cos > 0.0) {
        return 0.0;
    }
    let kr = k * r;
    match (bessel_k0(kr), bessel_k1(kr)) {
        // beyond underflow the ratio tends to 1 + 1/(2kr)
        (Ok(k0), Ok(k1)) if k0 > 0.0 => k * k1 / k0 * cos,
        _ => k * (1.0 + 0.5 / kr) * cos,
    }
}

/// Solve the forward problem for a unit point source at `source`.
pub fn solve_forward(mu_a: &ScalarField, model: &ForwardModel, source: (f64, f64)) -> Result<ScalarField> {
    let mesh = *mu_a.mesh();
    if let Some((node, _)) = mu_a.values().iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        return Err(Error::Domain(format!("absorption must be positive, node {node} is not")));
    }
    let load = point_source_load(&mesh, source.0, source.1)?;
    let problem = EllipticProblem {
        diffusion: model.diffusion,
        advection: None,
        reaction: Some(mu_a),
        load: Load::Vector(load),
        quadrature: model.quadrature,
    };
    let system = assemble_elliptic(&mesh, &problem)?;
    let system = match model.boundary {
        BoundaryModel::Robin(spec) => system.apply_robin(spec)?,
        BoundaryModel::Absorbing => {
            let k = model.decay_rate();
            system.apply_robin_with(|x, z, n| absorbing_kappa(k, source, x, z, n))?
        }
    };
    let u = system.solve()?;
    if let Some((node, _)) = u.values().iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        return Err(Error::Domain(format!("forward solution is not positive at node {node}")));
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_fem::RectMesh;

    #[test]
    fn linear_in_source_strength() {
        let mesh = RectMesh::new(0.0, 4.0, 0.0, 3.0, 16, 12).unwrap();
        let mu = ScalarField::constant(mesh, 0.1);
        let model = ForwardModel::new(0.02, 0.1).unwrap();
        let u = model.solve(&mu, (1.0, 1.5)).unwrap();
        let load = point_source_load(&mesh, 1.0, 1.5).unwrap();
        let doubled: Vec<f64> = load.iter().map(|v| 2.0 * v).collect();
        let problem = EllipticProblem {
            diffusion: 0.02,
            advection: None,
            reaction: Some(&mu),
            load: Load::Vector(doubled),
            quadrature: Quadrature::LowDispersion,
        };
        let k = model.decay_rate();
        let u2 = assemble_elliptic(&mesh, &problem)
            .unwrap()
            .apply_robin_with(|x, z, n| absorbing_kappa(k, (1.0, 1.5), x, z, n))
            .unwrap()
            .solve()
            .unwrap();
        for (a, b) in u.values().iter().zip(u2.values()) {
            assert!((2.0 * a - b).abs() <= 1e-12 * b.abs());
        }
    }

    #[test]
    fn kappa_vanishes_on_back_faces() {
        assert_eq!(absorbing_kappa(2.0, (0.0, 0.0), -1.0, 0.0, (1.0, 0.0)), 0.0);
        let front = absorbing_kappa(2.0, (0.0, 0.0), 1.0, 0.0, (1.0, 0.0));
        let expected = 2.0 * bessel_k1(2.0).unwrap() / bessel_k0(2.0).unwrap();
        assert!((front - expected).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_positive_absorption() {
        let mesh = RectMesh::new(0.0, 1.0, 0.0, 1.0, 4, 4).unwrap();
        let mu = ScalarField::zeros(mesh);
        let model = ForwardModel::new(0.02, 0.1).unwrap();
        assert!(model.solve(&mu, (0.5, 0.5)).is_err());
    }
}
