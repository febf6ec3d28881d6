fn main() {
    std::process::exit(relaysec_experiments::run(std::env::args_os()));
}
