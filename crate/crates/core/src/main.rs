fn main() {
    std::process::exit(bgamp::cli::main_with(std::env::args_os()));
}
