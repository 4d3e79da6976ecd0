fn main() {
    std::process::exit(carleman_lab::run(std::env::args_os()));
}
