fn main() {
    std::process::exit(inhomtree_cli::run_cli(std::env::args_os()));
}
