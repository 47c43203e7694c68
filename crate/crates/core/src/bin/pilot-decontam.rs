fn main() {
    std::process::exit(pilot_decontam::cli::main());
}
