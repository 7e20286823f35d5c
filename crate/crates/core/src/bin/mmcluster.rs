fn main() {
    std::process::exit(mmcluster::cli::run(std::env::args_os()));
}
