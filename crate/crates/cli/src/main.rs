use std::process::ExitCode;

fn main() -> ExitCode {
    coupling_cli::execute(std::env::args_os())
}
