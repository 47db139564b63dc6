fn main() {
    std::process::exit(iac_funnel_cli::run_cli(std::env::args_os()));
}
