//! Build the two-inclusion phantom, simulate noisy boundary data for every
//! source and show how the polynomial fit cleans the left-side trace.
//!
//! Usage: `cargo run --example measurements [-- <example 1-3>]`

use layerstrip::cli::{cmd_forward, cmd_phantom, RunConfig};
use layerstrip::forward_data::Side;

fn main() -> layerstrip::Result<()> {
    let example = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1);
    let cfg = RunConfig { example, seed: 7, ..RunConfig::default() };
    let mu = cmd_phantom(&cfg, None)?;
    println!("phantom {example}: mu_a in [{:.3}, {:.3}]", mu.min(), mu.max());

    let data = cmd_forward(&cfg, &mu, None)?;
    println!("{} sources, {} points per trace", data.traces().len(), data.layout().len());
    let left = data.layout().side_indices(Side::Left);
    let trace = &data.traces()[0];
    println!("{:>6} {:>12} {:>12} {:>12}", "z", "raw", "noisy", "denoised");
    for &i in left.iter().step_by(8) {
        let z = data.layout().points()[i].z;
        println!("{z:6.2} {:12.5e} {:12.5e} {:12.5e}", trace.raw[i], trace.noisy[i], trace.denoised[i]);
    }
    for n in 0..data.schedule().intervals() {
        let psi = data.psi(n);
        let (lo, hi) = psi.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
        println!("psi {n}: [{lo:.3}, {hi:.3}]");
    }
    Ok(())
}
