fn main() {
    std::process::exit(tankloop::cli::run_from_env());
}
