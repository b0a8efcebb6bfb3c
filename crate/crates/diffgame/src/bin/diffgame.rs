fn main() {
    std::process::exit(diffgame::cli::main_from(std::env::args_os()));
}
