fn main() {
    std::process::exit(lll_lab::run(std::env::args_os()));
}
