fn main() {
    std::process::exit(bees_cli::run(std::env::args_os()));
}
