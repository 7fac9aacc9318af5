fn main() {
    std::process::exit(splitshade::cli::run());
}
