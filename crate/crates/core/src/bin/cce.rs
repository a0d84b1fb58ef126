fn main() {
    std::process::exit(cce_core::cli::cli_main(std::env::args_os()));
}
