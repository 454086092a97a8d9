fn main() {
    std::process::exit(fracheat_cli::run(std::env::args_os()));
}
