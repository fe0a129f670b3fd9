//! Reconstruct one of the three phantoms end to end and score the result.
//!
//! Usage: `cargo run --release --example full_inversion [-- <example 1-3>]`

use layerstrip::cli::{cmd_forward, cmd_invert, cmd_phantom, RunConfig};
use layerstrip::metrics::local_maxima;

fn main() -> layerstrip::Result<()> {
    let example = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1);
    let cfg = RunConfig { example, seed: 1, ..RunConfig::default() };
    let mu = cmd_phantom(&cfg, None)?;
    let data = cmd_forward(&cfg, &mu, None)?;
    let run = cmd_invert(&cfg, &data, Some(&mu), None)?;

    println!("accelerator: {} iterations", run.accelerator.iterations());
    for (n, q) in run.reconstruction.q.iter().enumerate() {
        println!("stage {}: {} inner iterations", n + 1, q.iterations());
    }
    if let Some(m) = &run.metrics {
        println!("{m}");
    }
    let a = &run.reconstruction.coefficient;
    println!("a in [{:.3}, {:.3}], background {}", a.min(), a.max(), cfg.a_background());
    for p in local_maxima(a, &cfg.region()?).iter().take(3) {
        println!("peak at ({:.2}, {:.2}): {:.3}", p.x, p.z, p.value);
    }
    Ok(())
}
