use std::process::ExitCode;

fn main() -> ExitCode {
    emolog::cli::main_entry()
}
