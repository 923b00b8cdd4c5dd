fn main() {
    std::process::exit(covert_cli::run(std::env::args_os()));
}
