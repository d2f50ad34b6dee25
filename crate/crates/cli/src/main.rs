fn main() {
    std::process::exit(egolink_cli::main_with_args(std::env::args_os()));
}
