fn main() {
    std::process::exit(nheth::harness::cli::run(std::env::args_os()));
}
