fn main() {
    std::process::exit(ecoabr::cli::run(std::env::args_os()));
}
