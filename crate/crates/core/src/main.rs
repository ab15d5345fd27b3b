fn main() {
    std::process::exit(nncs_reach::cli::run(std::env::args_os()));
}
