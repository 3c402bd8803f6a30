fn main() {
    std::process::exit(diamond_optics::cli::main_with_args(std::env::args_os()));
}
