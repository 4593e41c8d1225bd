fn main() {
    std::process::exit(nrqed_spin::cli::run(std::env::args_os()));
}
