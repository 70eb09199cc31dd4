fn main() {
    dcb_marl::cli::init_logging();
    let code = dcb_marl::cli::run(std::env::args_os(), &mut std::io::stdout().lock());
    std::process::exit(code);
}
