//! Command-line front end: thin wrappers around the library stages plus
//! the one-command cross-domain experiment.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or validation error,
//! 3 internal error.

mod cmds;

use clap::error::ErrorKind;
use clap::Parser;

fn main() {
    let cli = match cmds::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| cmds::dispatch(cli)));
    let code = match outcome {
        Ok(Ok(())) => 0,
        Ok(Err(err)) => {
            eprintln!("error: {err}");
            let mut prev = err.to_string();
            let mut source = std::error::Error::source(&err);
            while let Some(s) = source {
                let text = s.to_string();
                // Many variants already embed their cause in the message.
                if !prev.contains(&text) {
                    eprintln!("  caused by: {text}");
                }
                prev = text;
                source = s.source();
            }
            2
        }
        // The panic handler has already printed the panic message.
        Err(_) => {
            eprintln!("internal error (see panic message above)");
            3
        }
    };
    std::process::exit(code);
}
