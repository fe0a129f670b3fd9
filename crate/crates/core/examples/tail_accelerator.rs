//! Build the first-guess tail from three sources, then refine it with the
//! relaxed fixed-point iteration and print the convergence history.

use layerstrip::cli::{cmd_forward, cmd_phantom, truth_coefficient, RunConfig};
use layerstrip::metrics::rmse_mae_me;
use layerstrip::tail::{first_guess_tail, run_accelerator_with};

fn main() -> layerstrip::Result<()> {
    let cfg = RunConfig { seed: 1, ..RunConfig::default() };
    let mu = cmd_phantom(&cfg, None)?;
    let data = cmd_forward(&cfg, &mu, None)?;
    let mesh = cfg.inversion_mesh()?;
    let region = cfg.region()?;
    let truth = truth_coefficient(&cfg, &mu, &mesh)?;

    let tail = first_guess_tail(&data, &mesh, cfg.k(), &cfg.tail_sources)?;
    let last = &data.traces().last().expect("at least one source").denoised;
    let boundary = data.layout().boundary_values_positive(last, &mesh)?;
    let basis = cfg.recovery_basis()?;
    let outcome = run_accelerator_with(&tail, &boundary, &basis, cfg.recovery_options(), &cfg.accelerator(), |a| {
        rmse_mae_me(&truth, a, &region).ok().map(|m| m.rmse)
    })?;

    println!("{:>4} {:>12} {:>8}", "m", "difference", "rmse");
    for r in &outcome.history {
        println!("{:4} {:12.4e} {:8.4}", r.iteration, r.criterion, r.score.unwrap_or(f64::NAN));
    }
    println!("converged: {}", outcome.converged);
    Ok(())
}
