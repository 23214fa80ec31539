fn main() {
    std::process::exit(durcsp::cli::main_with(std::env::args_os()));
}
