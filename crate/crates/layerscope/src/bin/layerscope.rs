use std::process::ExitCode;

fn main() -> ExitCode {
    layerscope::cli::main_from(std::env::args_os())
}
