fn main() {
    std::process::exit(adashift_cli::run(std::env::args_os()));
}
