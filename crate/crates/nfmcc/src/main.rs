use std::process::ExitCode;

fn main() -> ExitCode {
    nfmcc::cli::main_from(std::env::args_os())
}
