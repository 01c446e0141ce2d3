fn main() {
    std::process::exit(gsteg_cli::run(std::env::args_os()));
}
