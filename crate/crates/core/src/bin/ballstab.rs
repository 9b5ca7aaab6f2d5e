fn main() { std::process::exit(ballstab::cli::cli_main(std::env::args().collect())); }
