fn main() {
    std::process::exit(spreadpc::cli::main_with_args(std::env::args_os().collect()));
}
