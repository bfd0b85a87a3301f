use std::process::ExitCode;

fn main() -> ExitCode {
    redalert::cli::main_with_args(std::env::args_os())
}
