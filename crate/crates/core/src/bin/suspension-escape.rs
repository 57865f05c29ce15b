fn main() {
    std::process::exit(suspension_escape::cli::parse_and_dispatch(std::env::args_os()));
}
