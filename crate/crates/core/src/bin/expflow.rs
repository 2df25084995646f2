fn main() {
    std::process::exit(expflow::cli::main_with_args(std::env::args_os()));
}
