fn main() {
    std::process::exit(multiswarm_cli::dispatch(std::env::args_os()));
}
