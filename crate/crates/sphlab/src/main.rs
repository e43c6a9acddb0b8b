use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(sphlab::cli::run_from(std::env::args_os()))
}
