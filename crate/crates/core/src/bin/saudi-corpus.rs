fn main() {
    std::process::exit(saudi_corpus::cli::run(std::env::args_os()));
}
