fn main() {
    couplekit::cli::main()
}
