fn main() {
    std::process::exit(clf_core::cli::run(std::env::args_os()));
}
