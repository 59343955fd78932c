fn main() {
    std::process::exit(corrpool::cli::run(std::env::args_os()));
}
