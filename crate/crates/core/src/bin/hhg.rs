fn main() {
    std::process::exit(hhg::cli::run(std::env::args_os()));
}
