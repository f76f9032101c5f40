fn main() {
    std::process::exit(phasetrack::cli::main());
}
