fn main() {
    std::process::exit(cicheck::cli::run(std::env::args_os()));
}
