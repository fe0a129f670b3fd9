//! Write a forward and an inversion bundle to a scratch directory, then
//! regenerate the curves and scores from the bundle alone.

use layerstrip::cli::{cmd_forward, cmd_invert, cmd_phantom, cmd_report, Manifest, RunConfig};

fn main() -> layerstrip::Result<()> {
    let root = std::env::temp_dir().join("layerstrip-report-example");
    // a coarse inversion mesh keeps the example quick
    let cfg = RunConfig { inversion_mesh: [60, 30], ..RunConfig::default() };
    let mu = cmd_phantom(&cfg, Some(&root.join("phantom")))?;
    let data = cmd_forward(&cfg, &mu, Some(&root.join("forward")))?;
    let bundle = root.join("invert");
    cmd_invert(&cfg, &data, None, Some(&bundle))?;

    let manifest = Manifest::read(&bundle)?;
    println!("bundle {} ({} files, config {})", bundle.display(), manifest.files.len(), &manifest.config_hash[..12]);
    let report = cmd_report(&bundle, &mu, None)?;
    println!("{}", report.metrics);
    for s in &report.stages {
        println!("{s:?}");
    }
    println!("curves written to {}", bundle.join("report").display());
    Ok(())
}
