fn main() {
    std::process::exit(progst::cli::main_with_args(std::env::args_os()));
}
