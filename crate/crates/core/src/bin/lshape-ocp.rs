fn main() {
    std::process::exit(lshape_ocp::cli::dispatch(std::env::args_os()));
}
