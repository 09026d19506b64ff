fn main() {
    std::process::exit(weakcm_cli::main_with_args(std::env::args_os()));
}
