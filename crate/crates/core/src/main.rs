fn main() {
    std::process::exit(skdv::cli::run(std::env::args_os()));
}
