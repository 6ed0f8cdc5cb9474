fn main() {
    std::process::exit(review_audit::cli::run(std::env::args_os()));
}
