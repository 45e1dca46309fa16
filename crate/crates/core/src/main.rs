fn main() {
    std::process::exit(vsl_core::cli::main_with_args(std::env::args_os()));
}
