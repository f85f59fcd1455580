fn main() {
    std::process::exit(qmv_core::cli::main_with_args(std::env::args_os()));
}
