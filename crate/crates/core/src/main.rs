fn main() {
    std::process::exit(levyctl::cli::run(std::env::args_os()));
}
