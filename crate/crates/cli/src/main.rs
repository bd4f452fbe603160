use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(scs_collapse_cli::run(std::env::args_os()))
}
