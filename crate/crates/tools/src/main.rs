fn main() {
    std::process::exit(jointlp_tools::cli::run());
}
