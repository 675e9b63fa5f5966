fn main() {
    std::process::exit(ncens::cli::run(std::env::args_os()));
}
