use std::process::ExitCode;

fn main() -> ExitCode {
    gcal::cli::main()
}
