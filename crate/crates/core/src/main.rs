fn main() {
    std::process::exit(roistream::cli::run_cli(std::env::args_os()));
}
