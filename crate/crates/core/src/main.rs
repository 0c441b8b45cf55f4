fn main() {
    std::process::exit(kvflow::cli::main_entry());
}
