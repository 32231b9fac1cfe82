fn main() {
    std::process::exit(bergtoep::cli::run(std::env::args_os()));
}
