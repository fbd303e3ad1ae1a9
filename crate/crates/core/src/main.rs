fn main() {
    std::process::exit(minireduce::cli::run(std::env::args_os()));
}
