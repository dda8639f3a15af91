fn main() {
    std::process::exit(solitons_cli::run_cli(std::env::args_os()));
}
