fn main() {
    std::process::exit(dpm_rul_cli::run(std::env::args_os()));
}
