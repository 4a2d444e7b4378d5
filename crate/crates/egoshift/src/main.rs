fn main() {
    std::process::exit(egoshift::cli::main_with_args(std::env::args_os()));
}
