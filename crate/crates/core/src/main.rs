fn main() {
    std::process::exit(clipmine::cli::run(std::env::args_os()));
}
