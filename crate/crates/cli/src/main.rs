fn main() {
    std::process::exit(irfkit_cli::main_with(std::env::args_os()));
}
