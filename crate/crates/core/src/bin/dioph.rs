fn main() {
    std::process::exit(dioph::cli::run(std::env::args_os()));
}
