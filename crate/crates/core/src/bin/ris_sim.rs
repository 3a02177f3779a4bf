use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(ris_sim_core::cli::run(std::env::args()) as u8)
}
