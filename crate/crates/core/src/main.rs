fn main() {
    std::process::exit(cylevy::cli::run(std::env::args_os()));
}
