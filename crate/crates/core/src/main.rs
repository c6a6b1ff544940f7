fn main() {
    std::process::exit(ergomix::cli::main_with_args(std::env::args_os()));
}
