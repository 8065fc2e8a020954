fn main() {
    std::process::exit(binseq_cli::run(std::env::args_os()));
}
