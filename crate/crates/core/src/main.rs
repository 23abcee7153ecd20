fn main() {
    std::process::exit(talbot::cli::run(std::env::args_os()));
}
