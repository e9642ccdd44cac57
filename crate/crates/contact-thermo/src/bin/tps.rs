fn main() {
    std::process::exit(contact_thermo::cli::main_with_args(std::env::args_os()));
}
