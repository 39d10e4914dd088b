fn main() {
    std::process::exit(metalens::cli::run(std::env::args_os()));
}
