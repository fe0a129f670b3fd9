//! Solve the diffusion equation in a homogeneous medium and compare against
//! the whole-plane Green's function `K0(kr) / (2π D)`.

use layerstrip::cli::RunConfig;
use layerstrip::grid_fem::ScalarField;

fn main() -> layerstrip::Result<()> {
    let cfg = RunConfig::default();
    let model = cfg.forward_model()?;
    let mesh = cfg.outer_mesh()?;
    let mu = ScalarField::constant(mesh, cfg.background_mu_a);
    let source = (0.0, 10.0);
    let u = model.solve(&mu, source)?;

    println!("{:>6} {:>6} {:>12} {:>12} {:>9}", "x", "z", "fem", "green", "rel err");
    for (x, z) in [(5.0, 10.0), (7.5, 8.0), (10.0, 7.5), (12.5, 6.0), (15.0, 5.0)] {
        let r = (x - source.0).hypot(z - source.1);
        let fem = u.interpolate_positive(x, z)?;
        let green = model.green(r)?;
        println!("{x:6.2} {z:6.2} {fem:12.5e} {green:12.5e} {:9.2e}", fem / green - 1.0);
    }
    Ok(())
}
