fn main() {
    std::process::exit(infspec::cli::main_with(std::env::args_os()));
}
