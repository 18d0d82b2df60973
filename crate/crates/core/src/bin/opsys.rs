fn main() {
    std::process::exit(opsys::cli::run(std::env::args_os()));
}
