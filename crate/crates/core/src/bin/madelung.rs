fn main() {
    std::process::exit(madelung_core::cli::run(std::env::args_os()));
}
