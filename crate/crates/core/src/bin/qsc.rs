fn main() {
    std::process::exit(qsc::cli::main_with_args(std::env::args_os()));
}
