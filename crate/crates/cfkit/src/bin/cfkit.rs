fn main() {
    std::process::exit(cfkit::cli::main_entry());
}
