fn main() {
    std::process::exit(ringmice::cli::main_entry());
}
