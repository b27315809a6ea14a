fn main() {
    std::process::exit(tenperf::cli::main_with(std::env::args_os()));
}
