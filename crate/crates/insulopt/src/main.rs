fn main() {
    std::process::exit(insulopt::run_cli(std::env::args_os()));
}
