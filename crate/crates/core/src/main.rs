use std::process::ExitCode;

fn main() -> ExitCode {
    modular_spectra::cli::run()
}
