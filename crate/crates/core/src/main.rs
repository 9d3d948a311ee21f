fn main() {
    std::process::exit(neumann_lab::cli::run(std::env::args_os()));
}
