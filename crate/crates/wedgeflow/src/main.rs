fn main() {
    std::process::exit(wedgeflow::cli::run(std::env::args_os()));
}
