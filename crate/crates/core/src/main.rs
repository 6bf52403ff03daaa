fn main() {
    std::process::exit(triwave::cli::run_cli(std::env::args_os()));
}
