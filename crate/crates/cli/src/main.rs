fn main() {
    std::process::exit(polythresh_cli::run(std::env::args_os()));
}
