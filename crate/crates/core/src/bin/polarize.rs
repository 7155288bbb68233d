fn main() {
    std::process::exit(polarize::cli::run_command(std::env::args_os()));
}
