fn main() {
    std::process::exit(randwalk::cli::run(std::env::args_os()));
}
