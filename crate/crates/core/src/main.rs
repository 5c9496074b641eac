use std::process::ExitCode;

fn main() -> ExitCode {
    tw_cvqkd::cli::main()
}
