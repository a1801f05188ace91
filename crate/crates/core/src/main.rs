fn main() {
    std::process::exit(uvhalo::run());
}
