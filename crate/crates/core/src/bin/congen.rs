fn main() {
    std::process::exit(congen_core::cli::run(std::env::args_os()));
}
