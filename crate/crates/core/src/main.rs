fn main() {
    std::process::exit(hiercoord::cli::main());
}
