fn main() {
    std::process::exit(fcso::cli::main_with(std::env::args_os()));
}
