fn main() {
    std::process::exit(hammersley_cli::run(std::env::args_os()));
}
