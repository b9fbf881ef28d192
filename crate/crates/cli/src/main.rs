fn main() {
    std::process::exit(scenic_cli::main_with(std::env::args_os()));
}
