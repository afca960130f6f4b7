fn main() {
    std::process::exit(hgm::cli::main());
}
