use std::process::ExitCode;

fn main() -> ExitCode {
    urnlab::cli::run(std::env::args_os())
}
