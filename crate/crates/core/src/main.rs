fn main() {
    std::process::exit(dggan::cli::main());
}
