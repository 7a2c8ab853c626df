fn main() {
    std::process::exit(raformer_cli::main_with_args(std::env::args_os()));
}
