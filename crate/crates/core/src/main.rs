fn main() {
    std::process::exit(pseudo_abelian::cli::run(std::env::args_os()));
}
