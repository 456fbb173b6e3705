fn main() {
    std::process::exit(tdroute::cli::dispatch(std::env::args_os()));
}
