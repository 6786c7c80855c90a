fn main() {
    std::process::exit(iisa_server::cli::run(std::env::args_os()));
}
