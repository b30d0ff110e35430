use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(cgmimo_sim::cli::main())
}
