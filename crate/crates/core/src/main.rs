fn main() {
    std::process::exit(ricci_couple::cli::main());
}
