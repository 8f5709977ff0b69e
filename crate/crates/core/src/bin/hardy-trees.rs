fn main() {
    std::process::exit(hardy_trees::cli::main_with_args(std::env::args_os()));
}
