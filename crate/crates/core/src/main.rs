fn main() {
    std::process::exit(panoloc::cli::run(std::env::args_os()));
}
