fn main() {
    std::process::exit(bratteli::cli::main_with(std::env::args_os()));
}
