fn main() {
    std::process::exit(gdelt_geoclass::cli::run());
}
