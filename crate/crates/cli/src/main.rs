fn main() {
    std::process::exit(cqreduce_cli::run_cli(std::env::args_os()));
}
