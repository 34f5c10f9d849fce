fn main() {
    std::process::exit(nfpb_sim::cli::run(std::env::args_os()));
}
