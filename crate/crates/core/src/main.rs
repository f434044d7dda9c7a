fn main() {
    std::process::exit(epgif::cli::run(std::env::args_os()));
}
