fn main() {
    std::process::exit(spikenav::experiments::cli::run_cli(std::env::args_os()));
}
