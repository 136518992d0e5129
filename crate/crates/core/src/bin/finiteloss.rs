fn main() {
    std::process::exit(finiteloss::cli::run(std::env::args_os()));
}
