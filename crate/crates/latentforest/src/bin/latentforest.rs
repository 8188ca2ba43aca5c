fn main() {
    std::process::exit(latentforest::cli::main_with_args(std::env::args_os()));
}
