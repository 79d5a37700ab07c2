fn main() {
    std::process::exit(pfs_analytica::cli::run(std::env::args_os()));
}
