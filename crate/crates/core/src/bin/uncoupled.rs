fn main() {
    std::process::exit(uncoupled::cli::run(std::env::args_os()));
}
