fn main() {
    // --json reserves stderr for the single-line error object
    let json = std::env::args_os().any(|a| a == "--json");
    let default = if json { "off" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(default)).init();
    std::process::exit(glyphctl_cli::run_cli(std::env::args_os()));
}
