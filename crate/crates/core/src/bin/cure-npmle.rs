use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use cure_npmle::cli::{execute, Cli};
use cure_npmle::report::{to_json, ErrorDocument};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let doc = to_json(&ErrorDocument::new(&e)).unwrap_or_else(|_| format!("{e}\n"));
            let _ = std::io::stderr().write_all(doc.as_bytes());
            ExitCode::FAILURE
        }
    }
}
