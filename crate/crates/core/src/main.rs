fn main() {
    std::process::exit(parhom::cli::dispatch(std::env::args().skip(1)));
}
