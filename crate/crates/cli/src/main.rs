fn main() {
    std::process::exit(namescarcity_cli::run(std::env::args_os()));
}
