fn main() {
    std::process::exit(boxquant::cli::main_with_args(std::env::args_os()));
}
