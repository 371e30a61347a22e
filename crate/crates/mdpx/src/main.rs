fn main() {
    std::process::exit(mdpx::run(std::env::args_os()));
}
