use std::process::ExitCode;

fn main() -> ExitCode {
    figjudge::cli::main()
}
