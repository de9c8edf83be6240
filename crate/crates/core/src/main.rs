fn main() {
    std::process::exit(rushsim::cli::main(std::env::args_os()));
}
