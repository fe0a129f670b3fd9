fn main() {
    std::process::exit(layerstrip::cli::main_with_args(std::env::args_os()));
}
