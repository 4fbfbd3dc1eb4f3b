fn main() {
    let code = sotkit::cli::run(std::env::args_os());
    std::process::exit(code);
}
