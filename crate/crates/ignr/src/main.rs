fn main() {
    graphon_ignr::cli::main();
}
