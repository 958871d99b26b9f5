fn main() {
    std::process::exit(wmgraph::cli::dispatch(std::env::args_os()));
}
