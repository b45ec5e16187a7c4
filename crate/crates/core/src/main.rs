use std::process::ExitCode;

fn main() -> ExitCode {
    dgh::cli::main_with_args(std::env::args_os())
}
