use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(gazegate_cli::run(std::env::args_os()))
}
