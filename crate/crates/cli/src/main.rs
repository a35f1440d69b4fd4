fn main() {
    std::process::exit(bihpf_cli::run(std::env::args_os()));
}
