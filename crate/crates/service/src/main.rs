fn main() {
    std::process::exit(factful_service::cli::run());
}
