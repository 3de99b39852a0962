fn main() {
    std::process::exit(tcpaware_sim::cli::main(std::env::args_os()));
}
