fn main() {
    std::process::exit(lily_cli::run(std::env::args_os()));
}
