fn main() {
    std::process::exit(stealthlp::cli::run_from(std::env::args_os()));
}
