fn main() {
    std::process::exit(ssgm::cli::main_entry());
}
