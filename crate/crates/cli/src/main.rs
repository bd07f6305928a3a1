fn main() {
    std::process::exit(ptscatter_cli::run(std::env::args_os()));
}
