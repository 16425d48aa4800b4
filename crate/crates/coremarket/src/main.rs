use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(coremarket::cli::run(std::env::args()) as u8)
}
