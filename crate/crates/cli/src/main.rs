fn main() {
    std::process::exit(benedicks_cli::run(std::env::args_os()));
}
