fn main() {
    std::process::exit(pulsepair::cli::run_command(std::env::args()));
}
