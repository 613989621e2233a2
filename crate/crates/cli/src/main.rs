fn main() {
    std::process::exit(cfproj_cli::run(std::env::args_os()));
}
