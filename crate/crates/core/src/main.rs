fn main() {
    std::process::exit(pattern_cse::cli::main_with_args(std::env::args_os()));
}
