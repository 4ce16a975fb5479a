fn main() {
    std::process::exit(nbiot_ppt::cli::main_with_args(std::env::args_os()));
}
