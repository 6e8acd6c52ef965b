fn main() {
    std::process::exit(riskset::cli::run(std::env::args_os()));
}
