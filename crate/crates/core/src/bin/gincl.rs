fn main() {
    std::process::exit(galerkin_inclusions::cli::main_with_args(std::env::args_os()));
}
