fn main() {
    std::process::exit(sobext::cli::main_entry());
}
