fn main() {
    std::process::exit(asiaudit::cli::cli_main(std::env::args_os()));
}
