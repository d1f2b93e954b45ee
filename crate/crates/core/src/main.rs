fn main() {
    std::process::exit(msdehaze::cli::run(std::env::args_os()));
}
