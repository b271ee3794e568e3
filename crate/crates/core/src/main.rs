fn main() {
    std::process::exit(qgan_core::cli::main_with_args(std::env::args_os()));
}
