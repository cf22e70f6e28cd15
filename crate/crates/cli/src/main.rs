fn main() {
    std::process::exit(cvqkd_cli::run(std::env::args_os()));
}
