use std::process::ExitCode;

fn main() -> ExitCode {
    rabi_cli::run_main()
}
