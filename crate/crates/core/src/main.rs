fn main() {
    std::process::exit(hmlet::cli::run(std::env::args_os()));
}
