fn main() {
    std::process::exit(sharpineq::report::run(std::env::args_os()));
}
