fn main() {
    std::process::exit(nonnoether::cli::main_with_args(std::env::args_os()));
}
