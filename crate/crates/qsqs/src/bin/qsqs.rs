fn main() {
    std::process::exit(qsqs::cli::main_with_args(std::env::args_os()));
}
