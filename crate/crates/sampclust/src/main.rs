fn main() {
    std::process::exit(sampclust::cli::run(std::env::args_os()));
}
