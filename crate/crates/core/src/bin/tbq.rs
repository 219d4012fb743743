fn main() {
    std::process::exit(tbq::cli::main_from_env());
}
