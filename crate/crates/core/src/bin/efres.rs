fn main() {
    std::process::exit(efres::cli::run(std::env::args_os()));
}
