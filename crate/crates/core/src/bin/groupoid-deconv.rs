fn main() {
    std::process::exit(groupoid_deconv::cli::main_with_args(std::env::args_os()));
}
