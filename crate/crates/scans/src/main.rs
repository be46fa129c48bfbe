fn main() {
    std::process::exit(dressed_spectra::cli::main_with_args(std::env::args_os()));
}
