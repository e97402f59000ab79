fn main() {
    std::process::exit(concept_gae::cli::main_with(std::env::args_os()));
}
