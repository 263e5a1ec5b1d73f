fn main() {
    std::process::exit(tracknets::cli::run(std::env::args_os()));
}
