fn main() {
    std::process::exit(dyn4d::cli::run(std::env::args_os()));
}
