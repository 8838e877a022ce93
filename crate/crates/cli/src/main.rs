fn main() {
    std::process::exit(pa_sim::cli::main_with_args(std::env::args_os()));
}
