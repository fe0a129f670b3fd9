//! Load a run configuration from TOML, print the resolved values and show
//! how invalid settings are reported.

use layerstrip::cli::RunConfig;

fn main() {
    let text = "example = 3\nseed = 42\nnoise_level = 0.05\ninversion_mesh = [120, 60]\n";
    let cfg = RunConfig::from_toml(text).expect("valid configuration");
    println!("{}", cfg.to_toml());
    println!("sha256 {}", cfg.hash());
    println!("a background {} cm^-2, k {:.4} cm^-1", cfg.a_background(), cfg.k());
    println!("radii {:?}", cfg.radii());

    for bad in ["exmaple = 2\n", "example = 5\n", "centers = [[5.5, 7.0]]\n", "omega = [0, 30, 5, 10]\n"] {
        match RunConfig::from_toml(bad) {
            Ok(_) => println!("{bad:?} accepted"),
            Err(e) => println!("{:?} rejected: {e}", bad.trim()),
        }
    }
}
