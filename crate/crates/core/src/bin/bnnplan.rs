fn main() {
    std::process::exit(bnnplan::cli::run(std::env::args_os()));
}
