fn main() {
    std::process::exit(psd_bundle::cli::main_with_args(std::env::args_os()));
}
