use std::process::ExitCode;

fn main() -> ExitCode {
    malgan_lab::runner::cli_main()
}
