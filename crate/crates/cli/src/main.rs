fn main() {
    std::process::exit(drm_cli::run(std::env::args_os()));
}
