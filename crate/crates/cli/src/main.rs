use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(uscmem_cli::run(std::env::args_os()))
}
