fn main() {
    std::process::exit(lubrisurf::cli::main_with_args(std::env::args_os()));
}
