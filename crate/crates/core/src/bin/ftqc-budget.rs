fn main() {
    std::process::exit(ftqc_budget::cli::run(std::env::args_os()));
}
